#include "mfmclust/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace mfmclust {
namespace {

// Fixed so that the differential sets, and hence the truth, are the same
// across replicate seeds.
constexpr std::uint64_t kLayoutSeed = 20130101;

double mass_of(const Eigen::VectorXd& p, const std::vector<int>& idx) {
  double s = 0;
  for (int j : idx) s += p[j];
  return s;
}

ScenarioSpec preset(int z, std::uint64_t seed, int d, int n_psi, int n_lambda, int n_per_group, int depth,
                    double exponent) {
  ScenarioSpec spec;
  spec.z = z;
  spec.seed = seed;
  spec.n_per_group = n_per_group;
  spec.depth = depth;
  spec.base_profile = zipf_profile(d, exponent);
  assign_shift_sets(spec.base_profile, n_psi, n_lambda, 0.13, 0.15, spec.psi, spec.lambda);
  spec.validate();
  return spec;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (!shift_override && (z < 1 || z > 5)) throw InputError("scenario index z must be in 1..5");
  if (shift() < 0 || shift() > 1) throw InputError("shift fraction must lie in [0, 1]");
  const auto d = base_profile.size();
  if (d < 2) throw InputError("base profile needs at least two OTUs");
  if ((base_profile.array() < 0).any()) throw InputError("base profile has negative entries");
  if (std::abs(base_profile.sum() - 1.0) > 1e-12) throw InputError("base profile must sum to 1");
  std::set<int> seen;
  for (const auto* set : {&psi, &lambda}) {
    for (int j : *set) {
      if (j < 0 || j >= d) throw InputError("shift set index out of range");
      if (!seen.insert(j).second) throw InputError("psi and lambda must be disjoint and duplicate-free");
    }
  }
  if (shift() > 0 && (mass_of(base_profile, psi) <= 0 || mass_of(base_profile, lambda) <= 0))
    throw InputError("psi and lambda must carry positive mass");
  if (n_per_group < 1) throw InputError("n_per_group must be positive");
  if (depth < 1) throw InputError("depth must be positive");
  if (!feature_names.empty() && static_cast<Eigen::Index>(feature_names.size()) != d)
    throw InputError("feature_names must match the base profile length");
  if (!(concentration_sum > 0)) throw InputError("concentration_sum must be positive");
}

Eigen::VectorXd zipf_profile(int d, double exponent) {
  Eigen::VectorXd p(d);
  for (int k = 0; k < d; ++k) p[k] = std::pow(static_cast<double>(k + 1), -exponent);
  return p / p.sum();
}

void assign_shift_sets(Eigen::VectorXd& profile, int n_psi, int n_lambda, double psi_mass, double lambda_mass,
                       std::vector<int>& psi, std::vector<int>& lambda) {
  const int d = static_cast<int>(profile.size());
  if (n_psi < 1 || n_lambda < 1 || n_psi + n_lambda >= d) throw InputError("shift set sizes do not fit the profile");
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(kLayoutSeed);
  std::shuffle(order.begin(), order.end(), rng);
  psi.assign(order.begin(), order.begin() + n_psi);
  lambda.assign(order.begin() + n_psi, order.begin() + n_psi + n_lambda);
  std::sort(psi.begin(), psi.end());
  std::sort(lambda.begin(), lambda.end());

  const double p_psi = mass_of(profile, psi);
  const double p_lambda = mass_of(profile, lambda);
  const double p_rest = profile.sum() - p_psi - p_lambda;
  Eigen::VectorXd scale = Eigen::VectorXd::Constant(d, (1.0 - psi_mass - lambda_mass) / p_rest);
  for (int j : psi) scale[j] = psi_mass / p_psi;
  for (int j : lambda) scale[j] = lambda_mass / p_lambda;
  profile = profile.cwiseProduct(scale);
  profile /= profile.sum();
}

ScenarioSpec desk_scenario(int z, std::uint64_t seed) { return preset(z, seed, 200, 25, 42, 8, 1500, 1.5); }

ScenarioSpec full_scenario(int z, std::uint64_t seed) { return preset(z, seed, 2803, 356, 595, 15, 15000, 1.5); }

GroupMeans group_means(const ScenarioSpec& spec) {
  spec.validate();
  const auto& p = spec.base_profile;
  const double s = spec.shift();
  GroupMeans m{p, p};
  if (s == 0) return m;
  const double p_psi = mass_of(p, spec.psi);
  const double p_lambda = mass_of(p, spec.lambda);
  // A: psi -> lambda.
  for (int j : spec.psi) m.a[j] = p[j] * (1.0 - s);
  for (int j : spec.lambda) m.a[j] = p[j] + s * p_psi * p[j] / p_lambda;
  // B: lambda -> psi.
  for (int j : spec.lambda) m.b[j] = p[j] * (1.0 - s);
  for (int j : spec.psi) m.b[j] = p[j] + s * p_lambda * p[j] / p_psi;
  if ((m.a.array() < 0).any() || (m.b.array() < 0).any()) throw InputError("mass transfer produced a negative mean");
  return m;
}

std::vector<std::uint8_t> informative_features(const GroupMeans& means) {
  const auto d = means.a.size();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(d), 0);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double a = means.a[j], b = means.b[j];
    const bool differs = std::abs(a - b) > 1e-14 * std::max(a, b);
    out[static_cast<std::size_t>(j)] = differs && 0.5 * (a + b) > kHighAbundance;
  }
  return out;
}

Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> sample_dirichlet_multinomial(const Eigen::VectorXd& mean,
                                                                           double concentration_sum, int depth,
                                                                           std::mt19937_64& rng) {
  const auto d = mean.size();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  double total = 0;
  while (total <= 0) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (mean[j] <= 0) continue;
      theta[j] = std::gamma_distribution<double>(concentration_sum * mean[j], 1.0)(rng);
    }
    total = theta.sum();
  }
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(d);
  std::int64_t left = depth;
  double mass_left = total;
  for (Eigen::Index j = 0; j < d && left > 0; ++j) {
    if (theta[j] <= 0) continue;
    const double q = std::clamp(theta[j] / mass_left, 0.0, 1.0);
    const auto draw = q >= 1.0 ? left : std::binomial_distribution<std::int64_t>(left, q)(rng);
    counts[j] = draw;
    left -= draw;
    mass_left -= theta[j];
  }
  if (left > 0) {
    // Rounding left residual mass; hand it to the last positive category.
    for (Eigen::Index j = d - 1; j >= 0; --j) {
      if (theta[j] > 0) {
        counts[j] += left;
        break;
      }
    }
  }
  return counts;
}

LabeledDataset generate_scenario(const ScenarioSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  return generate_scenario(spec, rng);
}

LabeledDataset generate_scenario(const ScenarioSpec& spec, std::mt19937_64& rng) {
  const auto means = group_means(spec);
  const int d = static_cast<int>(spec.base_profile.size());
  const int n = 2 * spec.n_per_group;
  CountArray counts(n, d);
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<std::string> samples, features;
  for (int i = 0; i < n; ++i) {
    const int group = i < spec.n_per_group ? 0 : 1;
    labels[static_cast<std::size_t>(i)] = group;
    counts.row(i) =
        sample_dirichlet_multinomial(group == 0 ? means.a : means.b, spec.concentration_sum, spec.depth, rng)
            .transpose();
    samples.push_back((group == 0 ? "A" : "B") + std::to_string(i % spec.n_per_group + 1));
  }
  if (spec.feature_names.empty())
    for (int j = 0; j < d; ++j) features.push_back("OTU" + std::to_string(j + 1));
  else
    features = spec.feature_names;
  return {CountMatrix(std::move(counts), std::move(samples), std::move(features)), Partition(std::move(labels)),
          informative_features(means)};
}

PhyloTree random_binary_tree(const std::vector<std::string>& leaf_names, std::mt19937_64& rng) {
  if (leaf_names.size() < 2) throw InputError("a tree needs at least two leaves");
  std::vector<TreeNode> nodes;
  std::vector<int> active;
  for (const auto& name : leaf_names) {
    TreeNode leaf;
    leaf.label = name;
    active.push_back(static_cast<int>(nodes.size()));
    nodes.push_back(std::move(leaf));
  }
  while (active.size() > 1) {
    const auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    const auto a = pick(active.size());
    std::swap(active[a], active.back());
    const int left = active.back();
    active.pop_back();
    const auto b = pick(active.size());
    const int right = active[b];
    const int parent = static_cast<int>(nodes.size());
    TreeNode node;
    node.children = {left, right};
    nodes.push_back(std::move(node));
    nodes[static_cast<std::size_t>(left)].parent = parent;
    nodes[static_cast<std::size_t>(right)].parent = parent;
    active[b] = parent;
  }
  const int root = active.front();
  return PhyloTree(std::move(nodes), root);
}

}  // namespace mfmclust
