#include <algorithm>
#include <cmath>

#include "mfmclust/kernels.hpp"

namespace mfmclust {
namespace {

// Tables beyond this many entries fall back to direct evaluation.
constexpr std::size_t kMaxTable = std::size_t{1} << 22;

}  // namespace

void DmHyper::validate() const {
  if (!(alpha > 0) || !(beta1 > 0) || !(beta2 > 0)) throw InputError("alpha, beta1 and beta2 must be positive");
  if (!(w_prior > 0 && w_prior < 1)) throw InputError("w must lie strictly between 0 and 1");
}

DmKernel::DmKernel(const CountMatrix& m, DmHyper h) : hyper_(h), counts_(m.as_real()) {
  hyper_.validate();
  row_totals_ = counts_.rowwise().sum();
  column_totals_ = counts_.colwise().sum().transpose();
  grand_total_ = row_totals_.sum();
  row_ptr_.push_back(0);
  for (Eigen::Index i = 0; i < counts_.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts_.cols(); ++j) {
      if (counts_(i, j) != 0) {
        nz_col_.push_back(static_cast<int>(j));
        nz_val_.push_back(counts_(i, j));
      }
    }
    row_ptr_.push_back(static_cast<int>(nz_col_.size()));
  }
  const auto n = std::min(kMaxTable, static_cast<std::size_t>(grand_total_) + 1);
  log_gamma_alpha_ = log_gamma(h.alpha);
  lg_alpha_ = LogGammaTable<double>(h.alpha, n);
  lg_beta1_ = LogGammaTable<double>(h.beta1, n);
  lg_beta2_ = LogGammaTable<double>(h.beta2, n);
  lg_beta12_ = LogGammaTable<double>(h.beta1 + h.beta2, n);
}

DmKernel::Stats DmKernel::empty_stats() const {
  Stats s;
  s.feature_sums = Eigen::VectorXd::Zero(counts_.cols());
  return s;
}

void DmKernel::add(Stats& s, int sample, const SelectionIndicator& g) const {
  for (int k = row_ptr_[sample]; k < row_ptr_[sample + 1]; ++k) {
    s.feature_sums[nz_col_[k]] += nz_val_[k];
    if (g[nz_col_[k]]) s.informative += nz_val_[k];
  }
  s.total += row_totals_[sample];
  ++s.members;
}

void DmKernel::remove(Stats& s, int sample, const SelectionIndicator& g) const {
  for (int k = row_ptr_[sample]; k < row_ptr_[sample + 1]; ++k) {
    s.feature_sums[nz_col_[k]] -= nz_val_[k];
    if (g[nz_col_[k]]) s.informative -= nz_val_[k];
  }
  s.total -= row_totals_[sample];
  --s.members;
}

void DmKernel::merge(Stats& into, const Stats& from) const {
  into.feature_sums += from.feature_sums;
  into.total += from.total;
  into.informative += from.informative;
  into.members += from.members;
}

void DmKernel::on_flip(Stats& s, int feature, const SelectionIndicator& g) const {
  s.informative += g[feature] ? s.feature_sums[feature] : -s.feature_sums[feature];
}

double DmKernel::pooled_norm(int n_noise, double noise_total) const {
  if (n_noise == 0) return 0.0;
  const double ka = n_noise * hyper_.alpha;
  return log_gamma(ka) - n_noise * log_gamma_alpha_ - log_gamma(ka + noise_total);
}

double DmKernel::selected_norm(int n_selected, double informative) const {
  if (n_selected == 0) return 0.0;
  const double ka = n_selected * hyper_.alpha;
  return log_gamma(ka) - n_selected * log_gamma_alpha_ - log_gamma(ka + informative);
}

double DmKernel::beta_terms(double noise, double informative, double total) const {
  return lg_beta1_(noise) + lg_beta2_(informative) - lg_beta12_(total);
}

double DmKernel::noise_split_log_factor(const Stats& s) const {
  return beta_terms(s.total - s.informative, s.informative, s.total) - beta_terms(0, 0, 0);
}

double DmKernel::selected_log_factor(const Stats& s, const SelectionIndicator& g) const {
  double acc = selected_norm(g.count(), s.informative);
  for (int j = 0; j < g.size(); ++j)
    if (g[j]) acc += lg_alpha_(s.feature_sums[j]);
  return acc;
}

double DmKernel::cluster_log_factor(const Stats& s, const SelectionIndicator& g) const {
  if (s.members == 0) return 0.0;
  return noise_split_log_factor(s) + selected_log_factor(s, g);
}

double DmKernel::pooled_log_factor(const SelectionIndicator& g) const {
  const int n_noise = g.size() - g.count();
  double noise_total = 0;
  double acc = 0;
  for (int j = 0; j < g.size(); ++j) {
    if (g[j]) continue;
    noise_total += column_totals_[j];
    acc += lg_alpha_(column_totals_[j]);
  }
  return acc + pooled_norm(n_noise, noise_total);
}

double DmKernel::log_predictive_selected(int sample, const Stats& s, const SelectionIndicator& g) const {
  double acc = 0;
  double y_inf = 0;
  for (int k = row_ptr_[sample]; k < row_ptr_[sample + 1]; ++k) {
    const int j = nz_col_[k];
    if (!g[j]) continue;
    y_inf += nz_val_[k];
    acc += lg_alpha_(s.feature_sums[j] + nz_val_[k]) - lg_alpha_(s.feature_sums[j]);
  }
  const double ka = g.count() * hyper_.alpha;
  return acc + log_gamma(ka + s.informative) - log_gamma(ka + s.informative + y_inf);
}

double DmKernel::log_predictive(int sample, const Stats& s, const SelectionIndicator& g) const {
  double acc = 0;
  double y_inf = 0;
  for (int k = row_ptr_[sample]; k < row_ptr_[sample + 1]; ++k) {
    const int j = nz_col_[k];
    if (!g[j]) continue;
    y_inf += nz_val_[k];
    acc += lg_alpha_(s.feature_sums[j] + nz_val_[k]) - lg_alpha_(s.feature_sums[j]);
  }
  const double ka = g.count() * hyper_.alpha;
  const double y_tot = row_totals_[sample];
  const double noise = s.total - s.informative;
  acc += log_gamma(ka + s.informative) - log_gamma(ka + s.informative + y_inf);
  acc += beta_terms(noise + (y_tot - y_inf), s.informative + y_inf, s.total + y_tot) -
         beta_terms(noise, s.informative, s.total);
  return acc;
}

double DmKernel::log_flip_delta(std::span<const Stats* const> clusters, const SelectionIndicator& g,
                                std::span<const int> flips) const {
  struct Local {
    double informative;
    double total;
  };
  std::vector<Local> local;
  local.reserve(clusters.size());
  double informative_total = 0;
  for (const Stats* s : clusters) {
    local.push_back({s->informative, s->total});
    informative_total += s->informative;
  }
  int n_sel = g.count();
  const int d = g.size();
  double delta = 0;
  for (int j : flips) {
    const bool selecting = !g[j];
    const int sign = selecting ? 1 : -1;
    const int n_sel_new = n_sel + sign;
    const double noise_total = grand_total_ - informative_total;
    const double moved = column_totals_[j];
    const double noise_total_new = noise_total - sign * moved;

    delta += pooled_norm(d - n_sel_new, noise_total_new) - pooled_norm(d - n_sel, noise_total);
    delta -= sign * lg_alpha_(moved);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      auto& lc = local[c];
      const double y = clusters[c]->feature_sums[j];
      const double inf_new = lc.informative + sign * y;
      delta += beta_terms(lc.total - inf_new, inf_new, lc.total) -
               beta_terms(lc.total - lc.informative, lc.informative, lc.total);
      delta += selected_norm(n_sel_new, inf_new) - selected_norm(n_sel, lc.informative);
      delta += sign * lg_alpha_(y);
      lc.informative = inf_new;
    }
    informative_total += sign * moved;
    n_sel = n_sel_new;
  }
  return delta;
}

double log_dm_selected_marginal(const CountMatrix& m, const SelectionIndicator& gamma, const Partition& c,
                                const DmHyper& h) {
  if (gamma.size() != m.n_features()) throw InputError("selection length does not match the number of OTUs");
  if (c.size() != m.n_samples()) throw InputError("partition length does not match the number of samples");
  return log_marginal(DmKernel(m, h), c, gamma);
}

double log_predictive_dm(const Eigen::Ref<const Eigen::VectorXd>& sample_row, const DmKernel::Stats& target,
                         const SelectionIndicator& gamma, const DmHyper& h) {
  const double a = h.alpha;
  const double ka = gamma.count() * a;
  double y_inf = 0;
  double acc = 0;
  for (Eigen::Index j = 0; j < sample_row.size(); ++j) {
    if (!gamma[static_cast<int>(j)]) continue;
    y_inf += sample_row[j];
    acc += log_gamma(a + target.feature_sums[j] + sample_row[j]) - log_gamma(a + target.feature_sums[j]);
  }
  const double y_tot = sample_row.sum();
  const double noise = target.total - target.informative;
  acc += log_gamma(ka + target.informative) - log_gamma(ka + target.informative + y_inf);
  acc += log_gamma(h.beta1 + noise + y_tot - y_inf) - log_gamma(h.beta1 + noise);
  acc += log_gamma(h.beta2 + target.informative + y_inf) - log_gamma(h.beta2 + target.informative);
  acc += log_gamma(h.beta1 + h.beta2 + target.total) - log_gamma(h.beta1 + h.beta2 + target.total + y_tot);
  return acc;
}

}  // namespace mfmclust
