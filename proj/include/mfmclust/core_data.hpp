#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mfmclust {

/// Raised for malformed or invalid inputs (tables, trees, configurations).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using CountArray = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N x d table of sequence counts: rows are samples, columns are OTUs.
/// Every row has a positive total; names are unique.
class CountMatrix {
 public:
  CountMatrix() = default;

  /// Validates and takes ownership. Throws InputError on negative entries,
  /// zero-sum rows, duplicate names or shape mismatches.
  CountMatrix(CountArray counts, std::vector<std::string> sample_names,
              std::vector<std::string> feature_names);

  Eigen::Index n_samples() const { return counts_.rows(); }
  Eigen::Index n_features() const { return counts_.cols(); }

  const CountArray& counts() const { return counts_; }
  std::int64_t operator()(Eigen::Index i, Eigen::Index j) const { return counts_(i, j); }

  const std::vector<std::string>& sample_names() const { return sample_names_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> row_sums() const { return counts_.rowwise().sum(); }

  /// Counts as doubles, the form the likelihood code consumes.
  Eigen::MatrixXd as_real() const { return counts_.cast<double>(); }

 private:
  CountArray counts_;
  std::vector<std::string> sample_names_;
  std::vector<std::string> feature_names_;
};

/// Tab-separated table: header row of feature names (optionally preceded by a
/// corner cell), then one row per sample with its name in the first column.
CountMatrix parse_count_table(std::string_view text);
CountMatrix read_count_table(const std::string& path);
std::string format_count_table(const CountMatrix& m);

/// Divisor applied by rescale_counts; `automatic` uses the largest sample
/// depth divided by kAutoScaleDepth.
struct ScaleSpec {
  bool automatic = false;
  double value = 1.0;

  static ScaleSpec fixed(double v) { return {false, v}; }
  static ScaleSpec auto_depth() { return {true, 0.0}; }
};

inline constexpr double kAutoScaleDepth = 300.0;
inline constexpr double kDefaultScale = 50.0;

double resolve_scale(const CountMatrix& m, const ScaleSpec& scale);

/// Replaces each count by round-half-up(count / scale). A row that rounds to
/// all zeros is rejected rather than silently dropped.
CountMatrix rescale_counts(const CountMatrix& m, const ScaleSpec& scale);

}  // namespace mfmclust
