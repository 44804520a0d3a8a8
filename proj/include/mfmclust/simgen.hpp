#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfmclust/core_data.hpp"
#include "mfmclust/partition.hpp"
#include "mfmclust/phylo_tree.hpp"

namespace mfmclust {

/// Two-group synthetic design. Group A moves a fraction of every psi OTU's
/// probability onto lambda; group B does the reverse. The fraction is z / 5
/// unless shift_override is set.
struct ScenarioSpec {
  int z = 5;
  Eigen::VectorXd base_profile;
  std::vector<int> psi;
  std::vector<int> lambda;
  int n_per_group = 15;
  int depth = 15000;
  double concentration_sum = 200.0;
  std::uint64_t seed = 1;
  std::optional<double> shift_override;
  std::vector<std::string> feature_names;  // empty: OTU1, OTU2, ...

  double shift() const { return shift_override ? *shift_override : z / 5.0; }
  void validate() const;
};

inline constexpr double kHighAbundance = 0.001;

/// d = 200, 8 samples per group, depth 1500.
ScenarioSpec desk_scenario(int z, std::uint64_t seed);
/// d = 2803, |psi| = 356, |lambda| = 595, 15 samples per group, depth 15000.
ScenarioSpec full_scenario(int z, std::uint64_t seed);

/// Long-tail profile p_k proportional to k^-exponent, k = 1..d.
Eigen::VectorXd zipf_profile(int d, double exponent);

/// Picks disjoint psi / lambda sets of the given sizes with a fixed internal
/// seed, then rescales `profile` so they carry exactly psi_mass and
/// lambda_mass of the total.
void assign_shift_sets(Eigen::VectorXd& profile, int n_psi, int n_lambda, double psi_mass, double lambda_mass,
                       std::vector<int>& psi, std::vector<int>& lambda);

struct GroupMeans {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};

GroupMeans group_means(const ScenarioSpec& spec);

struct LabeledDataset {
  CountMatrix counts;
  Partition group_labels;
  std::vector<std::uint8_t> informative_truth;
};

/// Differential between groups and marginal abundance (mean of the two
/// group means) above kHighAbundance.
std::vector<std::uint8_t> informative_features(const GroupMeans& means);

LabeledDataset generate_scenario(const ScenarioSpec& spec);
LabeledDataset generate_scenario(const ScenarioSpec& spec, std::mt19937_64& rng);

/// theta ~ Dirichlet(concentration_sum * mean), counts ~ Multinomial(depth, theta).
Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> sample_dirichlet_multinomial(const Eigen::VectorXd& mean,
                                                                           double concentration_sum, int depth,
                                                                           std::mt19937_64& rng);

/// Random rooted binary topology over the given leaves, built by joining
/// uniformly chosen pairs.
PhyloTree random_binary_tree(const std::vector<std::string>& leaf_names, std::mt19937_64& rng);

}  // namespace mfmclust
