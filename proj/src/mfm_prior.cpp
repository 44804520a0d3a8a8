#include "mfmclust/mfm_prior.hpp"

#include <climits>
#include <cmath>
#include <numeric>

#include "mfmclust/core_data.hpp"
#include "mfmclust/log_math.hpp"

namespace mfmclust {
namespace {

constexpr int kMaxSeriesTerms = 10'000'000;

double log_cluster_weight(int n, const PriorSpec& spec) {
  if (spec.variant == PriorVariant::DirichletProcess) return log_gamma(static_cast<double>(n));
  return log_gamma(n + spec.eta) - log_gamma(spec.eta);
}

}  // namespace

ComponentPmf ComponentPmf::shifted_poisson(double rate) {
  if (!(rate > 0)) throw InputError("Poisson rate must be positive");
  ComponentPmf p;
  p.kind_ = Kind::ShiftedPoisson;
  p.rate_ = rate;
  return p;
}

ComponentPmf ComponentPmf::point_mass(int m) {
  if (m < 1) throw InputError("point mass must sit on a positive number of components");
  ComponentPmf p;
  p.kind_ = Kind::PointMass;
  p.point_ = m;
  return p;
}

ComponentPmf ComponentPmf::explicit_pmf(std::vector<double> probs) {
  double total = 0;
  for (double q : probs) {
    if (!(q >= 0)) throw InputError("component pmf has a negative entry");
    total += q;
  }
  if (!(total > 0)) throw InputError("component pmf has zero total mass");
  if (std::abs(total - 1.0) > 1e-12) throw InputError("component pmf does not sum to one");
  ComponentPmf p;
  p.kind_ = Kind::Explicit;
  for (double q : probs) p.log_probs_.push_back(std::log(q));
  while (!p.log_probs_.empty() && p.log_probs_.back() == kNegInf<double>) p.log_probs_.pop_back();
  return p;
}

double ComponentPmf::log_pmf(int m) const {
  if (m < 1) return kNegInf<double>;
  switch (kind_) {
    case Kind::ShiftedPoisson:
      return (m - 1) * std::log(rate_) - rate_ - log_gamma(static_cast<double>(m));
    case Kind::PointMass:
      return m == point_ ? 0.0 : kNegInf<double>;
    case Kind::Explicit:
      return m <= static_cast<int>(log_probs_.size()) ? log_probs_[static_cast<std::size_t>(m - 1)] : kNegInf<double>;
  }
  return kNegInf<double>;
}

int ComponentPmf::max_support() const {
  switch (kind_) {
    case Kind::ShiftedPoisson:
      return INT_MAX;
    case Kind::PointMass:
      return point_;
    case Kind::Explicit:
      return static_cast<int>(log_probs_.size());
  }
  return INT_MAX;
}

void PriorSpec::validate() const {
  if (!(eta > 0)) throw InputError("eta must be positive");
  if (!(dp_concentration > 0)) throw InputError("dp_concentration must be positive");
}

VnTable compute_vn_table(int n, const PriorSpec& spec, double tol, int min_terms) {
  if (n < 1) throw InputError("V_N table needs N >= 1");
  if (!(tol > 0)) throw InputError("V_N tolerance must be positive");
  spec.validate();
  VnTable table;
  table.n = n;
  table.tolerance = tol;
  table.log_vn.resize(static_cast<std::size_t>(n) + 1);

  if (spec.variant == PriorVariant::DirichletProcess) {
    const double a = spec.dp_concentration;
    for (int r = 1; r <= n + 1; ++r)
      table.log_vn[static_cast<std::size_t>(r - 1)] = r * std::log(a) + log_gamma(a) - log_gamma(a + n);
    return table;
  }

  const double log_tol = std::log(tol);
  const int support = spec.component_pmf.max_support();
  for (int r = 1; r <= n + 1; ++r) {
    double running = kNegInf<double>;
    double peak = kNegInf<double>;
    int peak_m = r;
    int terms = 0;
    for (int m = r; m <= support; ++m) {
      const double lp = spec.component_pmf.log_pmf(m);
      double term = kNegInf<double>;
      if (lp != kNegInf<double>)
        term = log_gamma(m + 1.0) - log_gamma(m - r + 1.0) + log_gamma(spec.eta * m) -
               log_gamma(spec.eta * m + n) + lp;
      running = log_add_exp(running, term);
      ++terms;
      if (term > peak) {
        peak = term;
        peak_m = m;
      }
      if (terms >= min_terms && m >= peak_m + 10 && running != kNegInf<double> && term < log_tol + running) break;
      if (terms > kMaxSeriesTerms) throw InputError("V_N series failed to converge");
    }
    table.log_vn[static_cast<std::size_t>(r - 1)] = running;
    table.truncation_terms = std::max(table.truncation_terms, terms);
  }
  if (table.log_vn.front() == kNegInf<double>) throw InputError("component pmf has zero total mass");
  return table;
}

double log_partition_prior_sizes(std::span<const int> sizes, const VnTable& v, const PriorSpec& spec) {
  const int k = static_cast<int>(sizes.size());
  int total = 0;
  double acc = 0;
  for (int s : sizes) {
    if (s <= 0) throw InputError("partition contains an empty cluster");
    total += s;
    acc += log_cluster_weight(s, spec);
  }
  if (total != v.n) throw InputError("partition size does not match the V_N table");
  return v(k) + acc;
}

double log_partition_prior(const Partition& c, const VnTable& v, const PriorSpec& spec) {
  const auto sizes = c.cluster_sizes();
  return log_partition_prior_sizes(sizes, v, spec);
}

double log_pair_prior_ratio(PairMove move, int n1, int n2, int n_clusters_before, const VnTable& v,
                            const PriorSpec& spec) {
  if (n1 < 1 || n2 < 1) throw InputError("cluster sizes in a split or merge must be positive");
  const double sizes = log_cluster_weight(n1, spec) + log_cluster_weight(n2, spec) - log_cluster_weight(n1 + n2, spec);
  if (move == PairMove::Split) {
    if (n_clusters_before + 1 > v.n) throw InputError("cannot split into more clusters than observations");
    return v(n_clusters_before + 1) - v(n_clusters_before) + sizes;
  }
  if (n_clusters_before < 2) throw InputError("merge needs at least two clusters");
  return v(n_clusters_before - 1) - v(n_clusters_before) - sizes;
}

Eigen::VectorXd log_urn_weights(std::span<const int> sizes_without, const VnTable& v, const PriorSpec& spec) {
  const int k = static_cast<int>(sizes_without.size());
  const int seated = std::accumulate(sizes_without.begin(), sizes_without.end(), 0);
  if (seated + 1 != v.n) throw InputError("urn weights need a V_N table built for the seated count plus one");
  const bool dp = spec.variant == PriorVariant::DirichletProcess;
  Eigen::VectorXd w(k + 1);
  for (int c = 0; c < k; ++c) {
    const int s = sizes_without[static_cast<std::size_t>(c)];
    w[c] = dp ? std::log(static_cast<double>(s)) : std::log(s + spec.eta);
  }
  if (dp) {
    w[k] = std::log(spec.dp_concentration);
  } else if (k == 0) {
    w[k] = 0.0;
  } else {
    w[k] = v(k + 1) - v(k) + std::log(spec.eta);
  }
  return w;
}

}  // namespace mfmclust
