#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mfmclust/chain_draws.hpp"
#include "mfmclust/kernels.hpp"
#include "mfmclust/log_math.hpp"
#include "mfmclust/mfm_prior.hpp"
#include "mfmclust/partition.hpp"

namespace mfmclust {

struct McmcConfig {
  long iterations = 20000;
  long burn_in = 10000;
  long thinning = 10;
  int gamma_moves_per_iter = 20;
  int launch_scans = 20;
  /// Unset: start from the features whose pooled count exceeds the mean
  /// feature total. Set: start from an independent Bernoulli draw at this
  /// rate. Random dense starts tend to settle in a mode that selects the
  /// rare-count tail and leaves the abundant features pooled.
  std::optional<double> initial_inclusion;
  std::uint64_t seed = 1;

  void validate() const;
  long expected_draws() const { return (iterations - burn_in) / thinning; }
};

struct MoveOutcome {
  bool accepted = false;
  double log_accept = kNegInf<double>;
};

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline bool accept_log(double log_ratio, Rng& rng) {
  if (log_ratio >= 0) return true;
  if (std::isnan(log_ratio) || log_ratio == kNegInf<double>) return false;
  return std::log(uniform01(rng)) < log_ratio;
}

/// Chain state: cluster slots with cached sufficient statistics, the current
/// selection, and the cached log marginal. Slots of merged-away clusters are
/// recycled.
template <class Kernel>
class McmcState {
 public:
  using Stats = typename Kernel::Stats;

  McmcState(const Kernel& k, const Partition& init, SelectionIndicator g, std::uint64_t seed)
      : selection(std::move(g)), rng(seed) {
    const auto canon = init.canonical();
    label.assign(canon.labels().begin(), canon.labels().end());
    const int n_clusters = canon.n_clusters();
    slots.assign(static_cast<std::size_t>(n_clusters), k.empty_stats());
    for (int i = 0; i < canon.size(); ++i) k.add(slots[static_cast<std::size_t>(canon[i])], i, selection);
    recompute_log_lik(k);
  }

  int n_samples() const { return static_cast<int>(label.size()); }
  int n_clusters() const { return static_cast<int>(slots.size() - free_slots.size()); }
  Stats& stats(int slot) { return slots[static_cast<std::size_t>(slot)]; }
  const Stats& stats(int slot) const { return slots[static_cast<std::size_t>(slot)]; }

  std::vector<const Stats*> active_stats() const {
    std::vector<const Stats*> out;
    out.reserve(slots.size());
    for (const auto& s : slots)
      if (s.members > 0) out.push_back(&s);
    return out;
  }

  Partition partition() const { return Partition(label).canonical(); }

  int open_slot(const Kernel& k) {
    if (!free_slots.empty()) {
      const int s = free_slots.back();
      free_slots.pop_back();
      return s;
    }
    slots.push_back(k.empty_stats());
    return static_cast<int>(slots.size()) - 1;
  }

  void close_slot(const Kernel& k, int slot) {
    stats(slot) = k.empty_stats();
    free_slots.push_back(slot);
  }

  void recompute_log_lik(const Kernel& k) {
    log_lik = k.pooled_log_factor(selection);
    for (const auto& s : slots)
      if (s.members > 0) log_lik += k.cluster_log_factor(s, selection);
  }

  std::vector<int> label;  // slot index per sample
  std::vector<Stats> slots;
  std::vector<int> free_slots;
  SelectionIndicator selection;
  double log_lik = 0;
  Rng rng;
};

/// log prior of the selection under independent Bernoulli(w) inclusion.
inline double log_selection_prior(const SelectionIndicator& g, double w) {
  return g.count() * std::log(w) + (g.size() - g.count()) * std::log1p(-w);
}

/// `repeats` Metropolis steps on the selection with the partition held
/// fixed. Each step is an add/delete of one uniformly chosen feature or a
/// swap of a uniformly chosen selected/unselected pair, with probability one
/// half each. Moves that would empty the selection, and swaps when nothing is
/// unselected, are rejected in place so the proposal stays symmetric.
template <class Kernel>
void update_gamma(McmcState<Kernel>& state, const Kernel& k, int repeats, AcceptanceStats* acc = nullptr) {
  auto& g = state.selection;
  const int d = g.size();
  const double log_odds = std::log(k.w_prior()) - std::log1p(-k.w_prior());
  for (int r = 0; r < repeats; ++r) {
    const bool swap = uniform01(state.rng) >= 0.5;
    int flips[2];
    std::span<const int> flip_span;
    double log_prior = 0;
    MoveStats* counter = nullptr;
    if (!swap) {
      if (acc) counter = &acc->gamma_flip;
      const int j = std::uniform_int_distribution<int>(0, d - 1)(state.rng);
      if (counter) ++counter->proposed;
      if (g[j] && g.count() == 1) continue;
      flips[0] = j;
      flip_span = std::span<const int>(flips, 1);
      log_prior = g[j] ? -log_odds : log_odds;
    } else {
      if (acc) counter = &acc->gamma_swap;
      if (counter) ++counter->proposed;
      const int n_on = g.count();
      const int n_off = d - n_on;
      if (n_off == 0) continue;
      int pick_on = std::uniform_int_distribution<int>(0, n_on - 1)(state.rng);
      int pick_off = std::uniform_int_distribution<int>(0, n_off - 1)(state.rng);
      for (int j = 0; j < d; ++j) {
        if (g[j]) {
          if (pick_on-- == 0) flips[0] = j;
        } else if (pick_off-- == 0) {
          flips[1] = j;
        }
      }
      flip_span = std::span<const int>(flips, 2);
    }
    const auto clusters = state.active_stats();
    const double delta = k.log_flip_delta(clusters, g, flip_span);
    if (!accept_log(delta + log_prior, state.rng)) continue;
    for (int j : flip_span) {
      g.flip(j);
      for (auto& s : state.slots)
        if (s.members > 0) k.on_flip(s, j, g);
    }
    state.log_lik += delta;
    if (counter) ++counter->accepted;
  }
}

/// Split or merge for an anchor pair with no other co-members: when i and l
/// share a cluster, i moves to a fresh singleton; otherwise the two
/// singletons merge. The proposal ratio is one.
template <class Kernel>
MoveOutcome simple_split_merge(McmcState<Kernel>& state, const Kernel& k, const PartitionPrior& prior, int i, int l,
                               AcceptanceStats* acc = nullptr) {
  using Stats = typename Kernel::Stats;
  const auto& g = state.selection;
  const int ci = state.label[static_cast<std::size_t>(i)];
  const int cl = state.label[static_cast<std::size_t>(l)];
  const int n_clusters = state.n_clusters();
  MoveOutcome out;
  if (ci == cl) {
    if (acc) ++acc->simple_split.proposed;
    if (n_clusters + 1 > state.n_samples()) return out;
    Stats si = k.empty_stats(), sl = k.empty_stats();
    k.add(si, i, g);
    k.add(sl, l, g);
    const double dlik = k.cluster_log_factor(si, g) + k.cluster_log_factor(sl, g) - k.cluster_log_factor(state.stats(ci), g);
    out.log_accept = prior.log_pair_ratio(PairMove::Split, 1, 1, n_clusters) + dlik;
    if (accept_log(out.log_accept, state.rng)) {
      const int fresh = state.open_slot(k);
      state.stats(fresh) = std::move(si);
      state.stats(ci) = std::move(sl);
      state.label[static_cast<std::size_t>(i)] = fresh;
      state.log_lik += dlik;
      out.accepted = true;
      if (acc) ++acc->simple_split.accepted;
    }
    return out;
  }
  if (acc) ++acc->simple_merge.proposed;
  Stats merged = state.stats(cl);
  k.merge(merged, state.stats(ci));
  const double dlik =
      k.cluster_log_factor(merged, g) - k.cluster_log_factor(state.stats(ci), g) - k.cluster_log_factor(state.stats(cl), g);
  out.log_accept = prior.log_pair_ratio(PairMove::Merge, state.stats(ci).members, state.stats(cl).members, n_clusters) + dlik;
  if (accept_log(out.log_accept, state.rng)) {
    state.stats(cl) = std::move(merged);
    state.close_slot(k, ci);
    state.label[static_cast<std::size_t>(i)] = cl;
    state.log_lik += dlik;
    out.accepted = true;
    if (acc) ++acc->simple_merge.accepted;
  }
  return out;
}

/// Intermediate allocation of the observations that share a cluster with
/// either anchor. side[k] is 0 for the i-anchor's cluster, 1 for the
/// l-anchor's; anchors are pinned and not listed in `members`.
template <class Kernel>
struct LaunchState {
  int anchor_i = -1;
  int anchor_l = -1;
  std::vector<int> members;
  std::vector<int> side;
  typename Kernel::Stats side_stats[2];
};

/// log allocation weights of sample s to the two launch clusters, with s
/// currently removed from both: log n_{c,-s} + log predictive.
template <class Kernel>
double restricted_log_odds(const Kernel& k, const SelectionIndicator& g, const LaunchState<Kernel>& launch, int s) {
  const auto& s0 = launch.side_stats[0];
  const auto& s1 = launch.side_stats[1];
  const double lq0 = std::log(static_cast<double>(s0.members)) + k.log_predictive(s, s0, g);
  const double lq1 = std::log(static_cast<double>(s1.members)) + k.log_predictive(s, s1, g);
  return lq0 - lq1;
}

/// One restricted Gibbs scan over launch.members in order. With `target`
/// empty, each allocation is sampled; otherwise each member is forced to
/// target[k]. Returns the log probability of the allocations made.
template <class Kernel>
double restricted_scan(const Kernel& k, const SelectionIndicator& g, LaunchState<Kernel>& launch, Rng& rng,
                       std::span<const int> target = {}) {
  double log_prob = 0;
  for (std::size_t m = 0; m < launch.members.size(); ++m) {
    const int s = launch.members[m];
    int& side = launch.side[m];
    k.remove(launch.side_stats[side], s, g);
    const double odds = restricted_log_odds(k, g, launch, s);
    const double log_p0 = log_sigmoid(odds);
    const double log_p1 = log_sigmoid(-odds);
    if (target.empty()) {
      side = uniform01(rng) < std::exp(log_p0) ? 0 : 1;
    } else {
      side = target[m];
    }
    log_prob += side == 0 ? log_p0 : log_p1;
    k.add(launch.side_stats[side], s, g);
  }
  return log_prob;
}

/// Builds the launch state: anchors in separate clusters, the other members
/// assigned by fair coin flips, then `scans` restricted Gibbs scans.
template <class Kernel>
LaunchState<Kernel> build_launch_state(const Kernel& k, const SelectionIndicator& g, int i, int l,
                                       std::vector<int> members, int scans, Rng& rng) {
  LaunchState<Kernel> launch;
  launch.anchor_i = i;
  launch.anchor_l = l;
  launch.members = std::move(members);
  launch.side.resize(launch.members.size());
  launch.side_stats[0] = k.empty_stats();
  launch.side_stats[1] = k.empty_stats();
  k.add(launch.side_stats[0], i, g);
  k.add(launch.side_stats[1], l, g);
  for (std::size_t m = 0; m < launch.members.size(); ++m) {
    launch.side[m] = uniform01(rng) < 0.5 ? 0 : 1;
    k.add(launch.side_stats[launch.side[m]], launch.members[m], g);
  }
  for (int t = 0; t < scans; ++t) restricted_scan(k, g, launch, rng);
  return launch;
}

/// Everything the restricted move computed, for auditing.
template <class Kernel>
struct RestrictedTrace {
  bool split = false;
  LaunchState<Kernel> launch;       // state before the final scan
  std::vector<int> proposal_side;   // sides of the proposed split, or original sides for a merge
  double log_q = 0;                 // log q(c^split | c) or log q(c | c^merge)
  double log_prior_ratio = 0;
  double log_lik_ratio = 0;
};

/// Restricted Gibbs split-merge for an anchor pair whose clusters contain
/// other observations.
template <class Kernel>
MoveOutcome restricted_split_merge(McmcState<Kernel>& state, const Kernel& k, const PartitionPrior& prior, int i,
                                   int l, int scans, AcceptanceStats* acc = nullptr,
                                   RestrictedTrace<Kernel>* trace = nullptr) {
  using Stats = typename Kernel::Stats;
  const auto& g = state.selection;
  const int ci = state.label[static_cast<std::size_t>(i)];
  const int cl = state.label[static_cast<std::size_t>(l)];
  const int n_clusters = state.n_clusters();
  std::vector<int> members;
  std::vector<int> original_side;
  for (int s = 0; s < state.n_samples(); ++s) {
    if (s == i || s == l) continue;
    const int c = state.label[static_cast<std::size_t>(s)];
    if (c == ci || c == cl) {
      members.push_back(s);
      original_side.push_back(c == ci && ci != cl ? 0 : 1);
    }
  }

  auto launch = build_launch_state(k, g, i, l, std::move(members), scans, state.rng);
  MoveOutcome out;

  if (ci == cl) {
    if (acc) ++acc->restricted_split.proposed;
    if (trace) trace->launch = launch;
    const double log_q = restricted_scan(k, g, launch, state.rng);
    const Stats& s0 = launch.side_stats[0];
    const Stats& s1 = launch.side_stats[1];
    const double dlik = k.cluster_log_factor(s0, g) + k.cluster_log_factor(s1, g) - k.cluster_log_factor(state.stats(ci), g);
    const double dprior = prior.log_pair_ratio(PairMove::Split, s0.members, s1.members, n_clusters);
    out.log_accept = dprior + dlik - log_q;
    if (trace) {
      trace->split = true;
      trace->proposal_side = launch.side;
      trace->log_q = log_q;
      trace->log_prior_ratio = dprior;
      trace->log_lik_ratio = dlik;
    }
    if (accept_log(out.log_accept, state.rng)) {
      const int fresh = state.open_slot(k);
      state.label[static_cast<std::size_t>(i)] = fresh;
      for (std::size_t m = 0; m < launch.members.size(); ++m)
        if (launch.side[m] == 0) state.label[static_cast<std::size_t>(launch.members[m])] = fresh;
      state.stats(fresh) = std::move(launch.side_stats[0]);
      state.stats(ci) = std::move(launch.side_stats[1]);
      state.log_lik += dlik;
      out.accepted = true;
      if (acc) ++acc->restricted_split.accepted;
    }
    return out;
  }

  if (acc) ++acc->restricted_merge.proposed;
  if (trace) trace->launch = launch;
  // Probability that a final scan from the launch state restores c.
  const double log_q = restricted_scan(k, g, launch, state.rng, original_side);
  Stats merged = state.stats(cl);
  k.merge(merged, state.stats(ci));
  const double dlik =
      k.cluster_log_factor(merged, g) - k.cluster_log_factor(state.stats(ci), g) - k.cluster_log_factor(state.stats(cl), g);
  const double dprior = prior.log_pair_ratio(PairMove::Merge, state.stats(ci).members, state.stats(cl).members, n_clusters);
  out.log_accept = dprior + dlik + log_q;
  if (trace) {
    trace->split = false;
    trace->proposal_side = original_side;
    trace->log_q = log_q;
    trace->log_prior_ratio = dprior;
    trace->log_lik_ratio = dlik;
  }
  if (accept_log(out.log_accept, state.rng)) {
    for (auto& lab : state.label)
      if (lab == ci) lab = cl;
    state.stats(cl) = std::move(merged);
    state.close_slot(k, ci);
    state.log_lik += dlik;
    out.accepted = true;
    if (acc) ++acc->restricted_merge.accepted;
  }
  return out;
}

/// Draws an anchor pair uniformly and applies the simple or the restricted
/// move depending on whether the pair has co-members.
template <class Kernel>
MoveOutcome split_merge_step(McmcState<Kernel>& state, const Kernel& k, const PartitionPrior& prior, int scans,
                             AcceptanceStats* acc = nullptr) {
  const int n = state.n_samples();
  if (n < 2) return {};
  const int i = std::uniform_int_distribution<int>(0, n - 1)(state.rng);
  int l = std::uniform_int_distribution<int>(0, n - 2)(state.rng);
  if (l >= i) ++l;
  const int ci = state.label[static_cast<std::size_t>(i)];
  const int cl = state.label[static_cast<std::size_t>(l)];
  const int together = state.stats(ci).members + (ci == cl ? 0 : state.stats(cl).members);
  if (together == 2) return simple_split_merge(state, k, prior, i, l, acc);
  return restricted_split_merge(state, k, prior, i, l, scans, acc);
}

/// Starting selection: each feature independently with probability p,
/// forced non-empty.
inline SelectionIndicator initial_selection(int d, double p, Rng& rng) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(d));
  for (auto& b : bits) b = uniform01(rng) < p ? 1 : 0;
  SelectionIndicator g(std::move(bits));
  if (g.count() == 0) g.flip(std::uniform_int_distribution<int>(0, d - 1)(rng));
  return g;
}

/// Features whose total exceeds the mean total; the single largest when
/// none does.
inline SelectionIndicator abundant_selection(const Eigen::Ref<const Eigen::VectorXd>& totals) {
  const double mean = totals.mean();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(totals.size()));
  for (Eigen::Index j = 0; j < totals.size(); ++j) bits[static_cast<std::size_t>(j)] = totals[j] > mean;
  SelectionIndicator g(std::move(bits));
  if (g.count() == 0) {
    Eigen::Index top = 0;
    totals.maxCoeff(&top);
    g.flip(static_cast<int>(top));
  }
  return g;
}

template <class Kernel>
using IterationHook = std::function<void(long, const McmcState<Kernel>&)>;

/// Full chain: per iteration, gamma_moves_per_iter selection steps then one
/// split-merge move; keeps every thinning-th state after burn-in. Starts from
/// a single cluster. Deterministic given config.seed.
template <class Kernel>
ChainDraws run_chain(const Kernel& k, const PartitionPrior& prior, const McmcConfig& cfg,
                     const IterationHook<Kernel>& hook = {}) {
  cfg.validate();
  Rng init_rng(cfg.seed);
  auto g = cfg.initial_inclusion ? initial_selection(k.n_features(), *cfg.initial_inclusion, init_rng)
                                 : abundant_selection(k.feature_totals());
  McmcState<Kernel> state(k, Partition::single_cluster(k.n_samples()), std::move(g), init_rng());
  ChainDraws out;
  out.draws.reserve(static_cast<std::size_t>(cfg.expected_draws()));
  for (long it = 1; it <= cfg.iterations; ++it) {
    update_gamma(state, k, cfg.gamma_moves_per_iter, &out.accept);
    split_merge_step(state, k, prior, cfg.launch_scans, &out.accept);
    if (hook) hook(it, state);
    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thinning == 0) {
      Draw d;
      d.iteration = it;
      d.partition = state.partition();
      d.selection = state.selection;
      d.log_posterior = prior.log_prior(d.partition) + log_selection_prior(d.selection, k.w_prior()) + state.log_lik;
      out.draws.push_back(std::move(d));
    }
  }
  return out;
}

enum class KernelKind { DirichletMultinomial, DirichletTreeMultinomial };

struct ModelSpec {
  KernelKind kernel = KernelKind::DirichletMultinomial;
  DmHyper dm;
  DtmHyper dtm;
  PriorSpec prior;
};

/// Runs one chain on already-rescaled data. A tree is required for the tree
/// kernel and ignored otherwise.
ChainDraws run_mcmc(const CountMatrix& data, const PhyloTree* tree, const ModelSpec& model, const McmcConfig& cfg);

}  // namespace mfmclust
