#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "mfmclust/sampler.hpp"
#include "oracles.hpp"

using namespace mfmclust;

namespace {

CountMatrix small_counts() {
  CountArray c(4, 3);
  c << 6, 1, 0,
       5, 2, 1,
       0, 3, 6,
       1, 2, 5;
  return CountMatrix(c, {"a", "b", "c", "d"}, {"x", "y", "z"});
}

using Key = std::pair<std::vector<int>, std::vector<std::uint8_t>>;

template <class Kernel>
double enumeration_tv(const Kernel& k, const PartitionPrior& prior, McmcConfig cfg) {
  const auto exact = oracle::exact_posterior(k.n_samples(), k.n_features(), [&](const Partition& c, const SelectionIndicator& g) {
    return prior.log_prior(c) + log_selection_prior(g, k.w_prior()) + log_marginal(k, c, g);
  });
  std::map<Key, long> counts;
  const auto draws = run_chain(k, prior, cfg);
  for (const auto& d : draws.draws) ++counts[{d.partition.labels(), d.selection.bits()}];
  return oracle::total_variation(exact, counts);
}

McmcConfig enumeration_config() {
  McmcConfig cfg;
  cfg.iterations = 400000;
  cfg.burn_in = 1000;
  cfg.thinning = 1;
  cfg.gamma_moves_per_iter = 1;
  cfg.launch_scans = 3;
  cfg.initial_inclusion = 0.5;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("DM chain matches the enumerated posterior") {
  const auto m = small_counts();
  const DmKernel k(m, DmHyper{0.8, 1.0, 1.0, 0.5});
  const PartitionPrior prior(4, PriorSpec{});
  CHECK(enumeration_tv(k, prior, enumeration_config()) < 0.02);
}

TEST_CASE("DM chain under the Dirichlet-process prior matches enumeration") {
  const auto m = small_counts();
  const DmKernel k(m, DmHyper{1.0, 2.0, 1.0, 0.3});
  PriorSpec spec;
  spec.variant = PriorVariant::DirichletProcess;
  spec.dp_concentration = 0.7;
  const PartitionPrior prior(4, spec);
  CHECK(enumeration_tv(k, prior, enumeration_config()) < 0.02);
}

TEST_CASE("DTM chain matches the enumerated posterior") {
  CountArray c(4, 4);
  c << 4, 1, 0, 2,
       3, 2, 1, 0,
       0, 1, 5, 3,
       1, 0, 4, 4;
  const CountMatrix m(c, {"a", "b", "c", "d"}, {"A", "B", "C", "D"});
  const auto tree = parse_newick("((A,B),(C,D));");
  const DtmKernel k(propagate_tree_counts(m, tree), DtmHyper{0.9, 0.5});
  const PartitionPrior prior(4, PriorSpec{});
  CHECK(enumeration_tv(k, prior, enumeration_config()) < 0.02);
}

TEST_CASE("restricted split-merge trace is internally consistent") {
  std::mt19937_64 gen(3);
  CountArray c(7, 4);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 4; ++j) c(i, j) = static_cast<std::int64_t>(gen() % 7);
  c(0, 0) += 1;
  const CountMatrix m(c, {"s0", "s1", "s2", "s3", "s4", "s5", "s6"}, {"w", "x", "y", "z"});
  const DmKernel k(m, DmHyper{});
  const PartitionPrior prior(7, PriorSpec{});
  const auto g = SelectionIndicator::from_string("1101");
  int checked_split = 0, checked_merge = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const Partition start(rep % 2 ? std::vector<int>{0, 0, 0, 1, 1, 1, 0} : std::vector<int>{0, 0, 0, 0, 0, 0, 0});
    McmcState<DmKernel> state(k, start, g, 1000 + rep);
    const int i = 0, l = rep % 2 ? 3 : 5;
    RestrictedTrace<DmKernel> trace;
    const auto before = state.partition();
    const auto out = restricted_split_merge(state, k, prior, i, l, 4, nullptr, &trace);

    // Rebuild the proposed partition from the trace.
    std::vector<int> proposed(7);
    if (trace.split) {
      for (int s = 0; s < 7; ++s) proposed[static_cast<std::size_t>(s)] = before[s] == before[i] ? 1 : before[s] + 2;
      proposed[static_cast<std::size_t>(i)] = 0;
      for (std::size_t q = 0; q < trace.launch.members.size(); ++q)
        proposed[static_cast<std::size_t>(trace.launch.members[q])] = trace.proposal_side[q] == 0 ? 0 : 1;
    } else {
      for (int s = 0; s < 7; ++s) proposed[static_cast<std::size_t>(s)] = before[s] == before[i] ? before[l] : before[s];
    }
    const Partition prop(proposed);
    CHECK(trace.log_lik_ratio ==
          doctest::Approx(log_marginal(k, prop, g) - log_marginal(k, before, g)).epsilon(1e-10));
    CHECK(trace.log_prior_ratio == doctest::Approx(prior.log_prior(prop) - prior.log_prior(before)).epsilon(1e-10));

    // Replaying the final scan toward the proposal reproduces log_q.
    auto replay = trace.launch;
    Rng unused(0);
    const double log_q = restricted_scan(k, g, replay, unused, trace.proposal_side);
    CHECK(log_q == doctest::Approx(trace.log_q).epsilon(1e-12));
    const double expect = trace.log_prior_ratio + trace.log_lik_ratio + (trace.split ? -trace.log_q : trace.log_q);
    CHECK(out.log_accept == doctest::Approx(expect).epsilon(1e-12));
    if (out.accepted) CHECK(state.partition() == prop.canonical());
    else CHECK(state.partition() == before);
    (trace.split ? checked_split : checked_merge)++;
  }
  CHECK(checked_split == 100);
  CHECK(checked_merge == 100);
}

TEST_CASE("cached statistics stay coherent through a chain") {
  std::mt19937_64 gen(8);
  CountArray c(10, 12);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 12; ++j) c(i, j) = static_cast<std::int64_t>(gen() % (i < 5 ? 3 + j : 15 - j));
  std::vector<std::string> s, f;
  for (int i = 0; i < 10; ++i) s.push_back("s" + std::to_string(i));
  for (int j = 0; j < 12; ++j) f.push_back("f" + std::to_string(j));
  const CountMatrix m(c, s, f);
  const DmKernel k(m, DmHyper{});
  const PartitionPrior prior(10, PriorSpec{});
  McmcConfig cfg;
  cfg.iterations = 3000;
  cfg.burn_in = 0;
  cfg.thinning = 1;
  long bad = 0;
  const IterationHook<DmKernel> hook = [&](long, const McmcState<DmKernel>& st) {
    const auto part = st.partition();
    if (std::abs(st.log_lik - log_marginal(k, part, st.selection)) > 1e-8) ++bad;
    for (int slot = 0; slot < static_cast<int>(st.slots.size()); ++slot) {
      const auto& stats = st.stats(slot);
      auto fresh = k.empty_stats();
      for (int i = 0; i < st.n_samples(); ++i)
        if (st.label[static_cast<std::size_t>(i)] == slot) k.add(fresh, i, st.selection);
      if (fresh.members != stats.members || std::abs(fresh.informative - stats.informative) > 1e-9 ||
          (fresh.feature_sums - stats.feature_sums).cwiseAbs().maxCoeff() > 1e-9)
        ++bad;
    }
  };
  const auto out = run_chain(k, prior, cfg, hook);
  CHECK(bad == 0);
  CHECK(out.draws.size() == 3000);
  for (const auto& d : out.draws) {
    CHECK(d.selection.count() > 0);
    CHECK(d.log_posterior == doctest::Approx(prior.log_prior(d.partition) + log_selection_prior(d.selection, 0.5) +
                                             log_marginal(k, d.partition, d.selection)).epsilon(1e-9));
  }
}

TEST_CASE("same seed gives the same chain, different seeds differ") {
  const auto m = small_counts();
  McmcConfig cfg;
  cfg.iterations = 2000;
  cfg.burn_in = 500;
  cfg.thinning = 3;
  ModelSpec spec;
  const auto a = run_mcmc(m, nullptr, spec, cfg);
  const auto b = run_mcmc(m, nullptr, spec, cfg);
  cfg.seed = 2;
  const auto c = run_mcmc(m, nullptr, spec, cfg);
  REQUIRE(a.draws.size() == b.draws.size());
  bool differs = false;
  for (std::size_t q = 0; q < a.draws.size(); ++q) {
    CHECK(format_draw(a.draws[q]) == format_draw(b.draws[q]));
    differs |= format_draw(a.draws[q]) != format_draw(c.draws[q]);
  }
  CHECK(differs);
}

TEST_CASE("default settings keep 1000 draws") {
  const McmcConfig cfg;
  CHECK(cfg.expected_draws() == 1000);
  const auto out = run_mcmc(small_counts(), nullptr, ModelSpec{}, cfg);
  CHECK(out.draws.size() == 1000);
  CHECK(out.draws.front().iteration == cfg.burn_in + cfg.thinning);
}

TEST_CASE("point mass on one component never leaves the single cluster") {
  ModelSpec spec;
  spec.prior.component_pmf = ComponentPmf::point_mass(1);
  McmcConfig cfg;
  cfg.iterations = 3000;
  cfg.burn_in = 0;
  cfg.thinning = 1;
  const auto out = run_mcmc(small_counts(), nullptr, spec, cfg);
  for (const auto& d : out.draws) CHECK(d.partition.n_clusters() == 1);
  CHECK(out.accept.simple_split.accepted + out.accept.restricted_split.accepted == 0);
}

TEST_CASE("gamma moves keep the selection non-empty") {
  CountArray c(3, 2);
  c << 3, 0, 2, 1, 0, 4;
  const CountMatrix m(c, {"a", "b", "c"}, {"x", "y"});
  const DmKernel k(m, DmHyper{1.0, 1.0, 1.0, 0.05});
  McmcState<DmKernel> state(k, Partition::single_cluster(3), SelectionIndicator::from_string("10"), 4);
  AcceptanceStats acc;
  for (int r = 0; r < 500; ++r) {
    update_gamma(state, k, 10, &acc);
    REQUIRE(state.selection.count() >= 1);
  }
  CHECK(acc.gamma_flip.proposed + acc.gamma_swap.proposed == 5000);
}

TEST_CASE("config validation") {
  McmcConfig cfg;
  cfg.burn_in = cfg.iterations;
  CHECK_THROWS(cfg.validate());
  cfg = McmcConfig{};
  cfg.thinning = 0;
  CHECK_THROWS(cfg.validate());
  cfg = McmcConfig{};
  cfg.initial_inclusion = 1.5;
  CHECK_THROWS(cfg.validate());
  const auto m = small_counts();
  ModelSpec spec;
  spec.kernel = KernelKind::DirichletTreeMultinomial;
  CHECK_THROWS_AS(run_mcmc(m, nullptr, spec, McmcConfig{}), InputError);
}

TEST_CASE("abundant starting selection") {
  Eigen::VectorXd t(5);
  t << 10, 1, 1, 6, 2;
  CHECK(abundant_selection(t).to_string() == "10010");
  t.setConstant(3);
  CHECK(abundant_selection(t).count() == 1);
}
