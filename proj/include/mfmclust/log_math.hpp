#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace mfmclust {

template <typename Scalar>
inline constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();

/// Reentrant log-gamma. glibc's lgamma writes the global `signgam`, which is a
/// data race when several chains run at once.
template <typename Scalar>
inline Scalar log_gamma(Scalar x) {
#if defined(__GLIBC__)
  int sign = 0;
  return static_cast<Scalar>(::lgamma_r(static_cast<double>(x), &sign));
#else
  return std::lgamma(x);
#endif
}

/// log(exp(a) + exp(b)) without overflow; either argument may be -inf.
template <typename Scalar>
inline Scalar log_add_exp(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf<Scalar>) return a;
  return a + std::log1p(std::exp(b - a));
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  if (values.size() == 0) return kNegInf<Scalar>;
  const Scalar peak = values.maxCoeff();
  if (!std::isfinite(peak)) return peak;
  return peak + std::log((values.derived().array() - peak).exp().sum());
}

/// log(1 / (1 + exp(-x))), the log-probability of the first of two options
/// whose log-odds are x.
template <typename Scalar>
inline Scalar log_sigmoid(Scalar x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// log Gamma(offset + n) for integer n, tabulated up to a fixed bound and
/// evaluated directly past it. The collapsed likelihoods only ever ask for
/// a fixed hyperparameter plus an integer count.
template <typename Scalar = double>
class LogGammaTable {
 public:
  LogGammaTable() = default;
  LogGammaTable(Scalar offset, std::size_t max_n) : offset_(offset), values_(max_n + 1) {
    for (std::size_t n = 0; n <= max_n; ++n)
      values_[n] = log_gamma(offset + static_cast<Scalar>(n));
  }

  Scalar offset() const { return offset_; }

  Scalar operator()(Scalar n) const {
    const auto k = static_cast<std::size_t>(n);
    if (static_cast<Scalar>(k) == n && k < values_.size()) return values_[k];
    return log_gamma(offset_ + n);
  }

 private:
  Scalar offset_ = 1;
  std::vector<Scalar> values_;
};

/// Symmetric Dirichlet-multinomial log factor of a count vector, without the
/// multinomial coefficient:
///   log Gamma(K a) - K log Gamma(a) + sum_k log Gamma(a + n_k) - log Gamma(K a + n).
template <typename Derived>
typename Derived::Scalar log_dirichlet_multinomial_factor(const Eigen::DenseBase<Derived>& counts,
                                                          typename Derived::Scalar alpha) {
  using Scalar = typename Derived::Scalar;
  const auto k = static_cast<Scalar>(counts.size());
  if (counts.size() == 0) return Scalar(0);
  Scalar acc = log_gamma(k * alpha) - k * log_gamma(alpha) - log_gamma(k * alpha + counts.sum());
  for (Eigen::Index j = 0; j < counts.size(); ++j) acc += log_gamma(alpha + counts.derived()(j));
  return acc;
}

}  // namespace mfmclust
