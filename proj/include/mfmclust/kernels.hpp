#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mfmclust/core_data.hpp"
#include "mfmclust/log_math.hpp"
#include "mfmclust/partition.hpp"
#include "mfmclust/phylo_tree.hpp"

// Collapsed component likelihoods. Every log marginal here omits the
// multinomial coefficients of the data, which depend on neither the
// partition nor the selection; values are therefore defined up to that
// model constant.

namespace mfmclust {

/// Hyperparameters of the Dirichlet-multinomial kernel with noise OTUs.
struct DmHyper {
  double alpha = 1.0;   ///< symmetric Dirichlet weight on both p and q_c
  double beta1 = 1.0;   ///< Beta prior on the noise share w_c
  double beta2 = 1.0;
  double w_prior = 0.5; ///< prior inclusion probability of each OTU

  void validate() const;
};

struct DtmHyper {
  double alpha = 1.0;
  double w_prior = 0.5; ///< prior inclusion probability of each internal node

  void validate() const;
};

/// Dirichlet-multinomial mixture component with OTU selection. Selected OTUs
/// have cluster-specific proportions q_c; unselected OTUs share a pooled p;
/// the per-cluster split between the two groups is Beta-distributed.
class DmKernel {
 public:
  /// Sufficient statistics of one cluster. `informative` is the total over
  /// the currently selected OTUs, so it must be refreshed on every flip.
  struct Stats {
    Eigen::VectorXd feature_sums;
    double total = 0;
    double informative = 0;
    int members = 0;
  };

  DmKernel(const CountMatrix& m, DmHyper h);

  int n_samples() const { return static_cast<int>(counts_.rows()); }
  int n_features() const { return static_cast<int>(counts_.cols()); }
  double w_prior() const { return hyper_.w_prior; }
  const DmHyper& hyper() const { return hyper_; }
  const Eigen::MatrixXd& counts() const { return counts_; }
  /// Pooled count of each OTU over all samples.
  const Eigen::VectorXd& feature_totals() const { return column_totals_; }

  Stats empty_stats() const;
  void add(Stats& s, int sample, const SelectionIndicator& g) const;
  void remove(Stats& s, int sample, const SelectionIndicator& g) const;
  void merge(Stats& into, const Stats& from) const;
  /// Call after g has been flipped at `feature`.
  void on_flip(Stats& s, int feature, const SelectionIndicator& g) const;

  /// Cluster-specific log factor: Beta factor on the noise/informative split
  /// plus the Dirichlet-multinomial factor over selected OTUs. Zero for an
  /// empty cluster.
  double cluster_log_factor(const Stats& s, const SelectionIndicator& g) const;
  double noise_split_log_factor(const Stats& s) const;
  double selected_log_factor(const Stats& s, const SelectionIndicator& g) const;

  /// Dirichlet-multinomial factor of the unselected OTUs pooled over all samples.
  double pooled_log_factor(const SelectionIndicator& g) const;

  /// log of the posterior predictive of sample i given a cluster that does
  /// not contain it. Equals cluster_log_factor(s + i) - cluster_log_factor(s).
  double log_predictive(int sample, const Stats& s, const SelectionIndicator& g) const;
  /// Same quantity restricted to the selected-OTU factor (no noise split).
  double log_predictive_selected(int sample, const Stats& s, const SelectionIndicator& g) const;

  /// Change in the full log marginal when the listed features are flipped
  /// (each at most once). Clusters must cover every sample.
  double log_flip_delta(std::span<const Stats* const> clusters, const SelectionIndicator& g,
                        std::span<const int> flips) const;

 private:
  double pooled_norm(int n_noise, double noise_total) const;
  double selected_norm(int n_selected, double informative) const;
  double beta_terms(double noise, double informative, double total) const;

  DmHyper hyper_;
  Eigen::MatrixXd counts_;
  Eigen::VectorXd row_totals_;
  Eigen::VectorXd column_totals_;
  double grand_total_ = 0;
  // Nonzero entries per sample, CSR layout.
  std::vector<int> row_ptr_;
  std::vector<int> nz_col_;
  std::vector<double> nz_val_;
  double log_gamma_alpha_ = 0;
  LogGammaTable<double> lg_alpha_, lg_beta1_, lg_beta2_, lg_beta12_;
};

/// Dirichlet-tree-multinomial mixture component with node selection. A
/// selected internal node has cluster-specific branch probabilities; an
/// unselected node shares one set across all samples.
class DtmKernel {
 public:
  struct Stats {
    Eigen::VectorXd branch;
    int members = 0;
  };

  DtmKernel(const TreeCounts& tc, DtmHyper h);

  int n_samples() const { return static_cast<int>(branch_.rows()); }
  /// Number of internal nodes, the length of the selection vector.
  int n_features() const { return static_cast<int>(offset_.size()); }
  double w_prior() const { return hyper_.w_prior; }
  const DtmHyper& hyper() const { return hyper_; }
  /// Pooled count passing through each internal node.
  Eigen::VectorXd feature_totals() const;

  Stats empty_stats() const;
  void add(Stats& s, int sample, const SelectionIndicator& g) const;
  void remove(Stats& s, int sample, const SelectionIndicator& g) const;
  void merge(Stats& into, const Stats& from) const;
  void on_flip(Stats&, int, const SelectionIndicator&) const {}

  /// Dirichlet-multinomial factor of internal node p for the given branch counts.
  double node_log_factor(int p, const Eigen::Ref<const Eigen::VectorXd>& branch) const;

  double cluster_log_factor(const Stats& s, const SelectionIndicator& g) const;
  double pooled_log_factor(const SelectionIndicator& g) const;
  double log_predictive(int sample, const Stats& s, const SelectionIndicator& g) const;
  double log_flip_delta(std::span<const Stats* const> clusters, const SelectionIndicator& g,
                        std::span<const int> flips) const;

 private:
  double node_factor_from(int p, const double* branch) const;

  DtmHyper hyper_;
  Eigen::MatrixXd branch_;
  std::vector<int> offset_, arity_;
  std::vector<int> arity_table_;   // per node: index into lg_arity_
  std::vector<double> node_const_; // log Gamma(K a) - K log Gamma(a)
  std::vector<double> pooled_node_factor_;
  // Internal nodes with a positive count, per sample, CSR layout.
  std::vector<int> row_ptr_;
  std::vector<int> active_node_;
  LogGammaTable<double> lg_alpha_;
  std::vector<LogGammaTable<double>> lg_arity_;
};

/// Per-cluster statistics for a partition, in canonical cluster order.
template <class Kernel>
std::vector<typename Kernel::Stats> cluster_stats(const Kernel& k, const Partition& c, const SelectionIndicator& g) {
  const auto canon = c.canonical();
  std::vector<typename Kernel::Stats> out;
  for (int i = 0; i < canon.size(); ++i) {
    const auto l = static_cast<std::size_t>(canon[i]);
    if (l >= out.size()) out.resize(l + 1, k.empty_stats());
    k.add(out[l], i, g);
  }
  return out;
}

/// Full collapsed log marginal for a (partition, selection) pair.
template <class Kernel>
double log_marginal(const Kernel& k, const Partition& c, const SelectionIndicator& g) {
  double acc = k.pooled_log_factor(g);
  for (const auto& s : cluster_stats(k, c, g)) acc += k.cluster_log_factor(s, g);
  return acc;
}

/// log P(Y | gamma, c) under the Dirichlet-multinomial kernel.
double log_dm_selected_marginal(const CountMatrix& m, const SelectionIndicator& gamma, const Partition& c,
                                const DmHyper& h);

/// log P(X | T, gamma, c) under the Dirichlet-tree-multinomial kernel.
double log_dtm_selected_marginal(const TreeCounts& tc, const PhyloTree& t, const SelectionIndicator& gamma,
                                 const Partition& c, const DtmHyper& h);

/// Posterior predictive of a raw count row given cluster statistics that
/// exclude it (dense evaluation, independent of the indexed fast path).
double log_predictive_dm(const Eigen::Ref<const Eigen::VectorXd>& sample_row, const DmKernel::Stats& target,
                         const SelectionIndicator& gamma, const DmHyper& h);

/// Same for a per-sample branch-count row of TreeCounts.
double log_predictive_dtm(const Eigen::Ref<const Eigen::VectorXd>& sample_branches, const DtmKernel::Stats& target,
                          const TreeCounts& layout, const SelectionIndicator& gamma, const DtmHyper& h);

}  // namespace mfmclust
