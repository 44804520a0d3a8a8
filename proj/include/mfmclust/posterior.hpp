#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mfmclust/chain_draws.hpp"
#include "mfmclust/partition.hpp"

namespace mfmclust {

/// zeta(i, j) = fraction of draws in which samples i and j share a cluster.
struct CoClusteringMatrix {
  Eigen::MatrixXd zeta;
  long n_draws = 0;
};

CoClusteringMatrix coclustering(std::span<const Partition> draws);
CoClusteringMatrix coclustering(std::span<const Draw> draws);

/// Hubert-Arabie adjusted Rand index. Defined as 1 when both partitions are
/// the same trivial partition (the index is 0/0 there).
double adjusted_rand(const Partition& a, const Partition& b);

/// Adjusted Rand agreement between a candidate partition and a co-clustering
/// matrix, summing over pairs i < j. Equals adjusted_rand(c, p) when zeta is
/// the 0/1 co-membership matrix of p.
double adjusted_rand(const Partition& candidate, const CoClusteringMatrix& z);

struct PartitionEstimate {
  Partition labels;
  double score = 0;
  long candidate_index = -1;
};

/// Scores every sampled partition against zeta and returns the best one;
/// ties go to the earliest draw.
PartitionEstimate summarize_partition(std::span<const Partition> draws, const CoClusteringMatrix& z);
PartitionEstimate summarize_partition(std::span<const Draw> draws, const CoClusteringMatrix& z);

/// Fraction of draws in which each feature is selected.
Eigen::VectorXd selection_frequencies(std::span<const SelectionIndicator> draws);
Eigen::VectorXd selection_frequencies(std::span<const Draw> draws);

/// Area under the ROC curve of `scores` against binary `truth`, computed as
/// the Mann-Whitney statistic with ties counted one half.
double roc_auc(const Eigen::Ref<const Eigen::VectorXd>& scores, std::span<const std::uint8_t> truth);

}  // namespace mfmclust
