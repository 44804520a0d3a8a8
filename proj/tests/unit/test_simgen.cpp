#include <doctest.h>

#include <cmath>
#include <random>

#include "mfmclust/simgen.hpp"

using namespace mfmclust;

TEST_CASE("preset layout") {
  const auto s = desk_scenario(3, 1);
  CHECK(s.base_profile.size() == 200);
  CHECK(s.psi.size() == 25);
  CHECK(s.lambda.size() == 42);
  double psi = 0, lambda = 0;
  for (int j : s.psi) psi += s.base_profile[j];
  for (int j : s.lambda) lambda += s.base_profile[j];
  CHECK(psi == doctest::Approx(0.13));
  CHECK(lambda == doctest::Approx(0.15));
  CHECK(s.shift() == doctest::Approx(0.6));
  const auto p = full_scenario(1, 1);
  CHECK(p.base_profile.size() == 2803);
  CHECK(p.psi.size() == 356);
  CHECK(p.lambda.size() == 595);
  CHECK(desk_scenario(1, 7).psi == desk_scenario(5, 9).psi);
}

TEST_CASE("group means conserve mass and shift in opposite directions") {
  for (int z = 1; z <= 5; ++z) {
    const auto s = desk_scenario(z, 1);
    const auto m = group_means(s);
    CHECK(m.a.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.b.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int j : s.psi) CHECK(m.a[j] < m.b[j]);
    for (int j : s.lambda) CHECK(m.a[j] > m.b[j]);
  }
}

TEST_CASE("full shift empties psi in group A and lambda in group B") {
  auto s = desk_scenario(5, 42);
  const auto data = generate_scenario(s);
  for (int i = 0; i < s.n_per_group; ++i)
    for (int j : s.psi) CHECK(data.counts(i, j) == 0);
  for (int i = s.n_per_group; i < 2 * s.n_per_group; ++i)
    for (int j : s.lambda) CHECK(data.counts(i, j) == 0);
}

TEST_CASE("no shift means no informative OTUs") {
  auto s = desk_scenario(1, 3);
  s.shift_override = 0.0;
  const auto data = generate_scenario(s);
  for (auto t : data.informative_truth) CHECK(t == 0);
}

TEST_CASE("truth marks shifted OTUs above the abundance threshold") {
  const auto s = desk_scenario(2, 3);
  const auto m = group_means(s);
  const auto truth = informative_features(m);
  int positives = 0;
  for (int j = 0; j < 200; ++j) {
    const bool shifted = std::find(s.psi.begin(), s.psi.end(), j) != s.psi.end() ||
                         std::find(s.lambda.begin(), s.lambda.end(), j) != s.lambda.end();
    CHECK(static_cast<bool>(truth[static_cast<std::size_t>(j)]) == (shifted && 0.5 * (m.a[j] + m.b[j]) > kHighAbundance));
    positives += truth[static_cast<std::size_t>(j)];
  }
  CHECK(positives > 10);
}

TEST_CASE("every sample has exactly the requested depth") {
  const auto data = generate_scenario(desk_scenario(4, 8));
  CHECK(data.counts.n_samples() == 16);
  for (auto r : data.counts.row_sums()) CHECK(r == 1500);
  CHECK(data.group_labels == Partition({0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1}));
  CHECK(data.counts.sample_names().front() == "A1");
  CHECK(data.counts.sample_names().back() == "B8");
}

TEST_CASE("Dirichlet-multinomial draws have the right mean and overdispersion") {
  Eigen::VectorXd mean(4);
  mean << 0.5, 0.3, 0.15, 0.05;
  const double a0 = 20;
  const int depth = 50;
  const int reps = 100000;
  std::mt19937_64 rng(77);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(4), sq = Eigen::VectorXd::Zero(4);
  for (int r = 0; r < reps; ++r) {
    const Eigen::VectorXd x = sample_dirichlet_multinomial(mean, a0, depth, rng).cast<double>();
    REQUIRE(x.sum() == depth);
    sum += x;
    sq += x.cwiseProduct(x);
  }
  for (int j = 0; j < 4; ++j) {
    const double m = sum[j] / reps;
    const double var = sq[j] / reps - m * m;
    const double expect_var = depth * mean[j] * (1 - mean[j]) * (depth + a0) / (1 + a0);
    CHECK(std::abs(m - depth * mean[j]) < 4 * std::sqrt(expect_var / reps));
    CHECK(var == doctest::Approx(expect_var).epsilon(0.03));
    CHECK(var > 1.5 * depth * mean[j] * (1 - mean[j]));
  }
}

TEST_CASE("generation is deterministic in the seed") {
  const auto a = generate_scenario(desk_scenario(3, 11));
  const auto b = generate_scenario(desk_scenario(3, 11));
  const auto c = generate_scenario(desk_scenario(3, 12));
  CHECK(a.counts.counts() == b.counts.counts());
  CHECK(a.counts.counts() != c.counts.counts());
}

TEST_CASE("random binary tree") {
  std::mt19937_64 rng(1);
  const std::vector<std::string> names{"a", "b", "c", "d", "e"};
  const auto t = random_binary_tree(names, rng);
  CHECK(t.n_internal() == 4);
  for (int p : t.internal_nodes()) CHECK(t.node(p).children.size() == 2);
  auto leaves = t.leaf_labels();
  std::sort(leaves.begin(), leaves.end());
  CHECK(leaves == names);
  CHECK_THROWS(random_binary_tree({"a"}, rng));
}

TEST_CASE("invalid scenarios") {
  auto s = desk_scenario(1, 1);
  s.z = 6;
  CHECK_THROWS_AS(s.validate(), InputError);
  s = desk_scenario(1, 1);
  s.lambda.push_back(s.psi.front());
  CHECK_THROWS_AS(s.validate(), InputError);
  s = desk_scenario(1, 1);
  s.base_profile[0] += 0.1;
  CHECK_THROWS_AS(s.validate(), InputError);
}
