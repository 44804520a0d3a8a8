#include <doctest.h>

#include <cmath>
#include <random>

#include "mfmclust/kernels.hpp"
#include "oracles.hpp"

using namespace mfmclust;

namespace {

CountMatrix random_counts(int n, int d, int max_count, std::mt19937_64& rng) {
  CountArray c(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) c(i, j) = static_cast<std::int64_t>(rng() % static_cast<unsigned>(max_count + 1));
    if (c.row(i).sum() == 0) c(i, static_cast<int>(rng() % static_cast<unsigned>(d))) = 1;
  }
  std::vector<std::string> s, f;
  for (int i = 0; i < n; ++i) s.push_back("s" + std::to_string(i));
  for (int j = 0; j < d; ++j) f.push_back("f" + std::to_string(j));
  return CountMatrix(c, s, f);
}

SelectionIndicator random_selection(int d, std::mt19937_64& rng) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(d));
  for (auto& b : bits) b = rng() % 2;
  bits[rng() % static_cast<unsigned>(d)] = 1;
  return SelectionIndicator(bits);
}

Partition random_partition(int n, std::mt19937_64& rng) {
  std::vector<int> l(static_cast<std::size_t>(n));
  for (auto& x : l) x = static_cast<int>(rng() % 3);
  return Partition(l).canonical();
}

}  // namespace

TEST_CASE("single sequence DM marginal") {
  CountArray c(1, 2);
  c << 1, 0;
  const CountMatrix m(c, {"s"}, {"a", "b"});
  const DmHyper h;
  const auto v = log_dm_selected_marginal(m, SelectionIndicator::all(2), Partition::single_cluster(1), h);
  CHECK(v == doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("DM marginal matches the term-by-term closed form") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto m = random_counts(5, 6, 9, rng);
    const auto g = random_selection(6, rng);
    const auto c = random_partition(5, rng);
    const DmHyper h{0.7 + 0.1 * (t % 5), 0.5 + 0.3 * (t % 3), 1.5, 0.5};
    CHECK(log_dm_selected_marginal(m, g, c, h) == doctest::Approx(oracle::dm_marginal(m.as_real(), g, c, h)).epsilon(1e-12));
  }
}

TEST_CASE("DTM marginal matches the node-by-node closed form") {
  std::mt19937_64 rng(12);
  const auto t = parse_newick("((f0,f1,f2),(f3,(f4,f5)));");
  for (int r = 0; r < 50; ++r) {
    const auto m = random_counts(5, 6, 9, rng);
    const auto tc = propagate_tree_counts(m, t);
    const auto g = random_selection(t.n_internal(), rng);
    const auto c = random_partition(5, rng);
    const DtmHyper h{0.5 + 0.25 * (r % 4), 0.5};
    CHECK(log_dtm_selected_marginal(tc, t, g, c, h) == doctest::Approx(oracle::dtm_marginal(tc, g, c, h.alpha)).epsilon(1e-12));
  }
}

TEST_CASE("DM marginal agrees with Monte-Carlo prior integration") {
  std::mt19937_64 rng(13);
  const DmHyper h;
  for (int r = 0; r < 3; ++r) {
    const auto m = random_counts(2 + r % 2, 3, 2, rng);
    const auto g = random_selection(3, rng);
    const auto c = random_partition(static_cast<int>(m.n_samples()), rng);
    const auto mc = oracle::dm_monte_carlo(m.as_real(), g, c, h, 200000, rng);
    const double exact = std::exp(log_dm_selected_marginal(m, g, c, h));
    CAPTURE(r);
    CHECK(std::abs(mc.mean - exact) < 3 * mc.standard_error);
  }
}

TEST_CASE("DTM marginal agrees with Monte-Carlo prior integration") {
  std::mt19937_64 rng(14);
  const auto t = parse_newick("((f0,f1),(f2,f3));");
  for (int r = 0; r < 3; ++r) {
    const auto m = random_counts(2, 4, 2, rng);
    const auto tc = propagate_tree_counts(m, t);
    const auto g = random_selection(3, rng);
    const auto c = random_partition(2, rng);
    const auto mc = oracle::dtm_monte_carlo(tc, g, c, 1.0, 200000, rng);
    const double exact = std::exp(log_dtm_selected_marginal(tc, t, g, c, DtmHyper{}));
    CAPTURE(r);
    CHECK(std::abs(mc.mean - exact) < 3 * mc.standard_error);
  }
}

TEST_CASE("predictive equals the marginal difference") {
  std::mt19937_64 rng(15);
  const DmHyper h{0.8, 1.3, 0.6, 0.5};
  const auto m = random_counts(6, 7, 12, rng);
  const DmKernel k(m, h);
  const auto tree = parse_newick("((f0,f1,f2),(f3,(f4,f5)),f6);");
  const auto tc = propagate_tree_counts(m, tree);
  const DtmKernel kt(tc, DtmHyper{0.9, 0.5});
  for (int r = 0; r < 30; ++r) {
    const auto g = random_selection(7, rng);
    const auto gt = random_selection(tree.n_internal(), rng);
    const int s = static_cast<int>(rng() % 6);
    auto stats = k.empty_stats();
    auto tstats = kt.empty_stats();
    for (int i = 0; i < 6; ++i) {
      if (i != s && rng() % 2) {
        k.add(stats, i, g);
        kt.add(tstats, i, gt);
      }
    }
    auto with = stats;
    k.add(with, s, g);
    const double diff = k.cluster_log_factor(with, g) - k.cluster_log_factor(stats, g);
    CHECK(k.log_predictive(s, stats, g) == doctest::Approx(diff).epsilon(1e-10));
    CHECK(log_predictive_dm(m.as_real().row(s).transpose(), stats, g, h) == doctest::Approx(diff).epsilon(1e-10));

    auto twith = tstats;
    kt.add(twith, s, gt);
    const double tdiff = kt.cluster_log_factor(twith, gt) - kt.cluster_log_factor(tstats, gt);
    CHECK(kt.log_predictive(s, tstats, gt) == doctest::Approx(tdiff).epsilon(1e-10));
    const Eigen::VectorXd row = tc.branch.row(s).cast<double>().transpose();
    CHECK(log_predictive_dtm(row, tstats, tc, gt, kt.hyper()) == doctest::Approx(tdiff).epsilon(1e-10));
  }
}

TEST_CASE("empty cluster predictive is the single-sample factor") {
  std::mt19937_64 rng(16);
  const auto m = random_counts(3, 4, 6, rng);
  const DmKernel k(m, DmHyper{});
  const auto g = random_selection(4, rng);
  auto one = k.empty_stats();
  k.add(one, 1, g);
  CHECK(k.log_predictive(1, k.empty_stats(), g) == doctest::Approx(k.cluster_log_factor(one, g)).epsilon(1e-12));
}

TEST_CASE("identical rows reinforce each other") {
  CountArray c(2, 3);
  c << 4, 1, 0, 4, 1, 0;
  const CountMatrix m(c, {"a", "b"}, {"x", "y", "z"});
  const DmKernel k(m, DmHyper{});
  const auto g = SelectionIndicator::from_string("110");
  auto first = k.empty_stats();
  k.add(first, 0, g);
  CHECK(k.log_predictive(1, first, g) > k.log_predictive(1, k.empty_stats(), g));
}

TEST_CASE("star tree DTM equals the selected-OTU DM factor") {
  std::mt19937_64 rng(17);
  for (int r = 0; r < 20; ++r) {
    const auto m = random_counts(5, 5, 8, rng);
    const auto tree = star_tree(m.feature_names());
    const auto tc = propagate_tree_counts(m, tree);
    const DmKernel dm(m, DmHyper{});
    const DtmKernel dtm(tc, DtmHyper{});
    const auto all = SelectionIndicator::all(5);
    const auto root = SelectionIndicator::all(1);
    const auto c = random_partition(5, rng);
    const auto ds = cluster_stats(dm, c, all);
    const auto ts = cluster_stats(dtm, c, root);
    REQUIRE(ds.size() == ts.size());
    for (std::size_t q = 0; q < ds.size(); ++q)
      CHECK(dm.selected_log_factor(ds[q], all) == doctest::Approx(dtm.cluster_log_factor(ts[q], root)).epsilon(1e-10));
    CHECK(dtm.pooled_log_factor(root) == 0.0);
  }
}

TEST_CASE("zero-count node contributes nothing") {
  CountArray c(2, 4);
  c << 0, 0, 3, 1, 0, 0, 2, 2;
  const CountMatrix m(c, {"a", "b"}, {"A", "B", "C", "D"});
  const auto t = parse_newick("((A,B),(C,D));");
  const auto tc = propagate_tree_counts(m, t);
  const DtmKernel k(tc, DtmHyper{});
  // Internal node 1 is (A,B).
  for (const char* bits : {"010", "011", "110"}) {
    const auto g = SelectionIndicator::from_string(bits);
    auto stats = k.empty_stats();
    k.add(stats, 0, g);
    k.add(stats, 1, g);
    CHECK(k.node_log_factor(1, stats.branch) == 0.0);
  }
  CHECK(k.pooled_log_factor(SelectionIndicator::from_string("100")) ==
        doctest::Approx(k.pooled_log_factor(SelectionIndicator::from_string("110"))).epsilon(1e-14));
}

TEST_CASE("marginal is exchangeable in sample order") {
  std::mt19937_64 rng(18);
  const auto m = random_counts(5, 4, 7, rng);
  const auto g = random_selection(4, rng);
  const Partition c({0, 1, 0, 2, 1});
  const std::vector<int> perm{3, 0, 4, 1, 2};
  CountArray pc(5, 4);
  std::vector<int> pl(5);
  std::vector<std::string> names;
  for (int i = 0; i < 5; ++i) {
    pc.row(i) = m.counts().row(perm[static_cast<std::size_t>(i)]);
    pl[static_cast<std::size_t>(i)] = c[perm[static_cast<std::size_t>(i)]];
    names.push_back("p" + std::to_string(i));
  }
  const CountMatrix pm(pc, names, m.feature_names());
  CHECK(log_dm_selected_marginal(m, g, c, DmHyper{}) ==
        doctest::Approx(log_dm_selected_marginal(pm, g, Partition(pl), DmHyper{})).epsilon(1e-12));
}

TEST_CASE("incremental merge equals recomputation") {
  std::mt19937_64 rng(19);
  const auto m = random_counts(6, 5, 9, rng);
  const DmKernel k(m, DmHyper{});
  const auto g = random_selection(5, rng);
  auto a = k.empty_stats(), b = k.empty_stats(), both = k.empty_stats();
  for (int i = 0; i < 6; ++i) {
    k.add(i < 3 ? a : b, i, g);
    k.add(both, i, g);
  }
  k.merge(a, b);
  CHECK(k.cluster_log_factor(a, g) == doctest::Approx(k.cluster_log_factor(both, g)).epsilon(1e-10));
  k.remove(both, 4, g);
  auto scratch = k.empty_stats();
  for (int i = 0; i < 6; ++i)
    if (i != 4) k.add(scratch, i, g);
  CHECK(k.cluster_log_factor(both, g) == doctest::Approx(k.cluster_log_factor(scratch, g)).epsilon(1e-10));
}

TEST_CASE("flip deltas match full recomputation") {
  std::mt19937_64 rng(20);
  const auto m = random_counts(7, 8, 15, rng);
  const DmKernel k(m, DmHyper{0.6, 2.0, 0.7, 0.5});
  const auto tree = parse_newick("((f0,f1),((f2,f3,f4),(f5,f6)),f7);");
  const DtmKernel kt(propagate_tree_counts(m, tree), DtmHyper{1.2, 0.5});
  for (int r = 0; r < 40; ++r) {
    const auto c = random_partition(7, rng);
    {
      const auto g = random_selection(8, rng);
      const int j1 = static_cast<int>(rng() % 8);
      int j2 = static_cast<int>(rng() % 8);
      if (j2 == j1) j2 = (j1 + 1) % 8;
      auto g2 = g;
      g2.flip(j1);
      g2.flip(j2);
      if (g2.count() > 0) {
        const auto stats = cluster_stats(k, c, g);
        std::vector<const DmKernel::Stats*> ptr;
        for (const auto& s : stats) ptr.push_back(&s);
        const int flips[2] = {j1, j2};
        CHECK(k.log_flip_delta(ptr, g, flips) ==
              doctest::Approx(log_marginal(k, c, g2) - log_marginal(k, c, g)).epsilon(1e-10));
      }
    }
    {
      const auto g = random_selection(tree.n_internal(), rng);
      const int j = static_cast<int>(rng() % static_cast<unsigned>(tree.n_internal()));
      auto g2 = g;
      g2.flip(j);
      if (g2.count() > 0) {
        const auto stats = cluster_stats(kt, c, g);
        std::vector<const DtmKernel::Stats*> ptr;
        for (const auto& s : stats) ptr.push_back(&s);
        const int flips[1] = {j};
        CHECK(kt.log_flip_delta(ptr, g, flips) ==
              doctest::Approx(log_marginal(kt, c, g2) - log_marginal(kt, c, g)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("hyperparameter validation") {
  CHECK_THROWS(DmHyper{0, 1, 1, 0.5}.validate());
  CHECK_THROWS(DmHyper{1, 1, 1, 1.0}.validate());
  CHECK_THROWS(DtmHyper{-1, 0.5}.validate());
  CHECK_NOTHROW(DmHyper{}.validate());
}

TEST_CASE("large counts stay finite") {
  CountArray c(2, 3);
  c << 5000000, 0, 12, 0, 7000000, 1;
  const CountMatrix m(c, {"a", "b"}, {"x", "y", "z"});
  const auto v = log_dm_selected_marginal(m, SelectionIndicator::from_string("101"), Partition({0, 1}), DmHyper{});
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(oracle::dm_marginal(m.as_real(), SelectionIndicator::from_string("101"), Partition({0, 1}), DmHyper{})).epsilon(1e-9));
}
