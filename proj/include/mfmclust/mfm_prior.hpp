#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mfmclust/partition.hpp"

namespace mfmclust {

/// Prior on the number of mixture components M, supported on {1, 2, ...}.
class ComponentPmf {
 public:
  /// M - 1 ~ Poisson(rate).
  static ComponentPmf shifted_poisson(double rate = 1.0);
  static ComponentPmf point_mass(int m);
  /// probs[k] = P(M = k + 1). Must sum to one.
  static ComponentPmf explicit_pmf(std::vector<double> probs);

  double log_pmf(int m) const;
  /// Largest m with positive mass; INT_MAX for unbounded support.
  int max_support() const;

 private:
  enum class Kind { ShiftedPoisson, PointMass, Explicit };
  Kind kind_ = Kind::ShiftedPoisson;
  double rate_ = 1.0;
  int point_ = 1;
  std::vector<double> log_probs_;
};

enum class PriorVariant { MixtureOfFiniteMixtures, DirichletProcess };

struct PriorSpec {
  double eta = 1.0;  ///< symmetric Dirichlet weight on the component proportions
  ComponentPmf component_pmf = ComponentPmf::shifted_poisson(1.0);
  PriorVariant variant = PriorVariant::MixtureOfFiniteMixtures;
  double dp_concentration = 1.0;  ///< only used by the Dirichlet-process variant

  void validate() const;
};

/// log V_N(R) for R = 1..N+1. Under the Dirichlet-process variant the same
/// table holds log[a^R Gamma(a) / Gamma(a + N)], which plays the same role.
struct VnTable {
  int n = 0;
  std::vector<double> log_vn;
  int truncation_terms = 0;  ///< most series terms summed for any entry
  double tolerance = 0;

  double operator()(int r) const { return log_vn[static_cast<std::size_t>(r - 1)]; }
};

inline constexpr double kDefaultVnTolerance = 1e-16;

/// Sums V_N(R) = sum_{m >= R} m!/(m-R)! * Gamma(eta m)/Gamma(eta m + N) * p(m)
/// in log space. Each series stops once a term falls below `tol` times the
/// running sum and at least ten terms have passed the largest one; at least
/// `min_terms` terms are always summed.
VnTable compute_vn_table(int n, const PriorSpec& spec, double tol = kDefaultVnTolerance, int min_terms = 0);

/// log P(c) = log V_N(|C|) + sum_c log eta^(n_c), with eta^(n) the ascending
/// factorial Gamma(n + eta)/Gamma(eta) (Gamma(n) for the DP variant).
double log_partition_prior(const Partition& c, const VnTable& v, const PriorSpec& spec);
double log_partition_prior_sizes(std::span<const int> sizes, const VnTable& v, const PriorSpec& spec);

enum class PairMove { Split, Merge };

/// log P(c') / P(c) when one cluster of n1 + n2 members splits into sizes n1
/// and n2 (Split), or when clusters of sizes n1 and n2 merge (Merge).
/// `n_clusters_before` is |C| of the current state c.
double log_pair_prior_ratio(PairMove move, int n1, int n2, int n_clusters_before, const VnTable& v,
                            const PriorSpec& spec);

/// Unnormalized log weights for seating one more observation: one entry per
/// existing cluster (size n) followed by the new-cluster weight. `v` must be
/// built for the total count including the new observation.
Eigen::VectorXd log_urn_weights(std::span<const int> sizes_without, const VnTable& v, const PriorSpec& spec);

/// Spec plus its precomputed table, the handle the sampler carries.
class PartitionPrior {
 public:
  PartitionPrior(int n, PriorSpec spec) : spec_(std::move(spec)), table_(compute_vn_table(n, spec_)) {}

  const PriorSpec& spec() const { return spec_; }
  const VnTable& table() const { return table_; }

  double log_prior(const Partition& c) const { return log_partition_prior(c, table_, spec_); }
  double log_pair_ratio(PairMove move, int n1, int n2, int n_clusters_before) const {
    return log_pair_prior_ratio(move, n1, n2, n_clusters_before, table_, spec_);
  }

 private:
  PriorSpec spec_;
  VnTable table_;
};

}  // namespace mfmclust
