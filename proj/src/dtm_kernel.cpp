#include <algorithm>
#include <map>

#include "mfmclust/kernels.hpp"

namespace mfmclust {
namespace {

constexpr std::size_t kMaxTable = std::size_t{1} << 22;

}  // namespace

void DtmHyper::validate() const {
  if (!(alpha > 0)) throw InputError("alpha must be positive");
  if (!(w_prior > 0 && w_prior < 1)) throw InputError("w must lie strictly between 0 and 1");
}

Eigen::VectorXd DtmKernel::feature_totals() const {
  Eigen::VectorXd out(n_features());
  for (int p = 0; p < n_features(); ++p)
    out[p] = branch_.middleCols(offset_[static_cast<std::size_t>(p)], arity_[static_cast<std::size_t>(p)]).sum();
  return out;
}

DtmKernel::DtmKernel(const TreeCounts& tc, DtmHyper h)
    : hyper_(h), branch_(tc.branch.cast<double>()), offset_(tc.offset), arity_(tc.arity) {
  hyper_.validate();
  const double grand = branch_.rows() > 0 && !offset_.empty()
                           ? branch_.middleCols(offset_[0], arity_[0]).sum()
                           : 0.0;
  const auto n = std::min(kMaxTable, static_cast<std::size_t>(grand) + 1);
  lg_alpha_ = LogGammaTable<double>(h.alpha, n);

  std::map<int, int> arity_index;
  for (int k : arity_) {
    if (arity_index.count(k)) continue;
    arity_index.emplace(k, static_cast<int>(lg_arity_.size()));
    lg_arity_.emplace_back(k * h.alpha, n);
  }
  const double lga = log_gamma(h.alpha);
  for (int k : arity_) {
    arity_table_.push_back(arity_index.at(k));
    node_const_.push_back(log_gamma(k * h.alpha) - k * lga);
  }

  const Eigen::VectorXd pooled = branch_.colwise().sum().transpose();
  for (int p = 0; p < n_features(); ++p) pooled_node_factor_.push_back(node_factor_from(p, pooled.data()));

  row_ptr_.push_back(0);
  for (Eigen::Index i = 0; i < branch_.rows(); ++i) {
    for (int p = 0; p < n_features(); ++p)
      if (branch_.row(i).segment(offset_[static_cast<std::size_t>(p)], arity_[static_cast<std::size_t>(p)]).sum() > 0)
        active_node_.push_back(p);
    row_ptr_.push_back(static_cast<int>(active_node_.size()));
  }
}

double DtmKernel::node_factor_from(int p, const double* branch) const {
  const auto up = static_cast<std::size_t>(p);
  const double* b = branch + offset_[up];
  double acc = node_const_[up];
  double total = 0;
  for (int k = 0; k < arity_[up]; ++k) {
    acc += lg_alpha_(b[k]);
    total += b[k];
  }
  return acc - lg_arity_[static_cast<std::size_t>(arity_table_[up])](total);
}

double DtmKernel::node_log_factor(int p, const Eigen::Ref<const Eigen::VectorXd>& branch) const {
  return node_factor_from(p, branch.data());
}

DtmKernel::Stats DtmKernel::empty_stats() const {
  Stats s;
  s.branch = Eigen::VectorXd::Zero(branch_.cols());
  return s;
}

void DtmKernel::add(Stats& s, int sample, const SelectionIndicator&) const {
  s.branch += branch_.row(sample).transpose();
  ++s.members;
}

void DtmKernel::remove(Stats& s, int sample, const SelectionIndicator&) const {
  s.branch -= branch_.row(sample).transpose();
  --s.members;
}

void DtmKernel::merge(Stats& into, const Stats& from) const {
  into.branch += from.branch;
  into.members += from.members;
}

double DtmKernel::cluster_log_factor(const Stats& s, const SelectionIndicator& g) const {
  if (s.members == 0) return 0.0;
  double acc = 0;
  for (int p = 0; p < n_features(); ++p)
    if (g[p]) acc += node_factor_from(p, s.branch.data());
  return acc;
}

double DtmKernel::pooled_log_factor(const SelectionIndicator& g) const {
  double acc = 0;
  for (int p = 0; p < n_features(); ++p)
    if (!g[p]) acc += pooled_node_factor_[static_cast<std::size_t>(p)];
  return acc;
}

double DtmKernel::log_predictive(int sample, const Stats& s, const SelectionIndicator& g) const {
  double acc = 0;
  for (int k = row_ptr_[sample]; k < row_ptr_[sample + 1]; ++k) {
    const int p = active_node_[static_cast<std::size_t>(k)];
    if (!g[p]) continue;
    const auto up = static_cast<std::size_t>(p);
    const double* base = s.branch.data() + offset_[up];
    double before = 0, added = 0;
    for (int b = 0; b < arity_[up]; ++b) {
      const double x = branch_(sample, offset_[up] + b);
      before += base[b];
      added += x;
      if (x != 0) acc += lg_alpha_(base[b] + x) - lg_alpha_(base[b]);
    }
    const auto& lg_k = lg_arity_[static_cast<std::size_t>(arity_table_[up])];
    acc += lg_k(before) - lg_k(before + added);
  }
  return acc;
}

double DtmKernel::log_flip_delta(std::span<const Stats* const> clusters, const SelectionIndicator& g,
                                 std::span<const int> flips) const {
  double delta = 0;
  for (int p : flips) {
    double per_cluster = 0;
    for (const Stats* s : clusters) per_cluster += node_factor_from(p, s->branch.data());
    const double change = per_cluster - pooled_node_factor_[static_cast<std::size_t>(p)];
    delta += g[p] ? -change : change;
  }
  return delta;
}

double log_dtm_selected_marginal(const TreeCounts& tc, const PhyloTree& t, const SelectionIndicator& gamma,
                                 const Partition& c, const DtmHyper& h) {
  if (gamma.size() != t.n_internal() || tc.n_internal() != t.n_internal())
    throw InputError("selection length does not match the number of internal nodes");
  if (c.size() != tc.n_samples()) throw InputError("partition length does not match the number of samples");
  return log_marginal(DtmKernel(tc, h), c, gamma);
}

double log_predictive_dtm(const Eigen::Ref<const Eigen::VectorXd>& sample_branches, const DtmKernel::Stats& target,
                          const TreeCounts& layout, const SelectionIndicator& gamma, const DtmHyper& h) {
  const double a = h.alpha;
  double acc = 0;
  for (int p = 0; p < layout.n_internal(); ++p) {
    if (!gamma[p]) continue;
    const int off = layout.offset[static_cast<std::size_t>(p)];
    const int k = layout.arity[static_cast<std::size_t>(p)];
    double before = 0, added = 0;
    for (int b = 0; b < k; ++b) {
      before += target.branch[off + b];
      added += sample_branches[off + b];
      acc += log_gamma(a + target.branch[off + b] + sample_branches[off + b]) - log_gamma(a + target.branch[off + b]);
    }
    acc += log_gamma(k * a + before) - log_gamma(k * a + before + added);
  }
  return acc;
}

}  // namespace mfmclust
