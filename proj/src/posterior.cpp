#include "mfmclust/posterior.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "mfmclust/core_data.hpp"

namespace mfmclust {
namespace {

std::int64_t choose2(std::int64_t n) { return n * (n - 1) / 2; }

std::vector<Partition> partitions_of(std::span<const Draw> draws) {
  std::vector<Partition> out;
  out.reserve(draws.size());
  for (const auto& d : draws) out.push_back(d.partition);
  return out;
}

}  // namespace

CoClusteringMatrix coclustering(std::span<const Partition> draws) {
  if (draws.empty()) throw InputError("co-clustering needs at least one draw");
  const int n = draws.front().size();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (const auto& p : draws) {
    if (p.size() != n) throw InputError("draws disagree on the number of samples");
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (p[i] == p[j]) counts(i, j) += 1.0;
  }
  CoClusteringMatrix out;
  out.n_draws = static_cast<long>(draws.size());
  out.zeta = counts / static_cast<double>(draws.size());
  out.zeta.triangularView<Eigen::StrictlyLower>() = out.zeta.transpose();
  out.zeta.diagonal().setOnes();
  return out;
}

CoClusteringMatrix coclustering(std::span<const Draw> draws) {
  const auto parts = partitions_of(draws);
  return coclustering(std::span<const Partition>(parts));
}

double adjusted_rand(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) throw InputError("adjusted Rand needs partitions of equal length");
  const auto ca = a.canonical();
  const auto cb = b.canonical();
  std::map<std::pair<int, int>, std::int64_t> table;
  std::map<int, std::int64_t> rows, cols;
  for (int i = 0; i < ca.size(); ++i) {
    ++table[{ca[i], cb[i]}];
    ++rows[ca[i]];
    ++cols[cb[i]];
  }
  std::int64_t index = 0, sum_a = 0, sum_b = 0;
  for (const auto& [key, n] : table) index += choose2(n);
  for (const auto& [key, n] : rows) sum_a += choose2(n);
  for (const auto& [key, n] : cols) sum_b += choose2(n);
  const auto total = choose2(a.size());
  if (total == 0) return 1.0;
  const double expected = static_cast<double>(sum_a) * static_cast<double>(sum_b) / static_cast<double>(total);
  const double maximum = 0.5 * static_cast<double>(sum_a + sum_b);
  if (maximum == expected) return 1.0;
  return (static_cast<double>(index) - expected) / (maximum - expected);
}

double adjusted_rand(const Partition& candidate, const CoClusteringMatrix& z) {
  const int n = candidate.size();
  if (z.zeta.rows() != n) throw InputError("candidate partition and co-clustering matrix disagree on size");
  double agree = 0, together = 0, zeta_sum = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double zij = z.zeta(i, j);
      zeta_sum += zij;
      if (candidate[i] == candidate[j]) {
        together += 1.0;
        agree += zij;
      }
    }
  }
  const auto total = static_cast<double>(choose2(n));
  if (total == 0) return 1.0;
  const double expected = together * zeta_sum / total;
  const double denom = 0.5 * (together + zeta_sum) - expected;
  if (denom == 0) return 1.0;
  return (agree - expected) / denom;
}

PartitionEstimate summarize_partition(std::span<const Partition> draws, const CoClusteringMatrix& z) {
  if (draws.empty()) throw InputError("partition summary needs at least one draw");
  std::map<std::vector<int>, double> scored;
  PartitionEstimate best;
  for (std::size_t m = 0; m < draws.size(); ++m) {
    const auto canon = draws[m].canonical();
    auto [it, fresh] = scored.try_emplace(canon.labels(), 0.0);
    if (fresh) it->second = adjusted_rand(canon, z);
    if (best.candidate_index < 0 || it->second > best.score) {
      best.labels = canon;
      best.score = it->second;
      best.candidate_index = static_cast<long>(m);
    }
  }
  return best;
}

PartitionEstimate summarize_partition(std::span<const Draw> draws, const CoClusteringMatrix& z) {
  const auto parts = partitions_of(draws);
  return summarize_partition(std::span<const Partition>(parts), z);
}

Eigen::VectorXd selection_frequencies(std::span<const SelectionIndicator> draws) {
  if (draws.empty()) throw InputError("selection frequencies need at least one draw");
  const int d = draws.front().size();
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(d);
  for (const auto& g : draws) {
    if (g.size() != d) throw InputError("draws disagree on the number of features");
    for (int j = 0; j < d; ++j)
      if (g[j]) freq[j] += 1.0;
  }
  return freq / static_cast<double>(draws.size());
}

Eigen::VectorXd selection_frequencies(std::span<const Draw> draws) {
  std::vector<SelectionIndicator> sel;
  sel.reserve(draws.size());
  for (const auto& d : draws) sel.push_back(d.selection);
  return selection_frequencies(std::span<const SelectionIndicator>(sel));
}

double roc_auc(const Eigen::Ref<const Eigen::VectorXd>& scores, std::span<const std::uint8_t> truth) {
  const auto n = static_cast<std::size_t>(scores.size());
  if (truth.size() != n) throw InputError("scores and truth differ in length");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[static_cast<Eigen::Index>(a)] < scores[static_cast<Eigen::Index>(b)]; });
  // Average ranks over ties.
  std::vector<double> rank(n);
  for (std::size_t k = 0; k < n;) {
    std::size_t e = k;
    while (e + 1 < n && scores[static_cast<Eigen::Index>(order[e + 1])] == scores[static_cast<Eigen::Index>(order[k])]) ++e;
    const double avg = 0.5 * static_cast<double>(k + e) + 1.0;
    for (std::size_t t = k; t <= e; ++t) rank[order[t]] = avg;
    k = e + 1;
  }
  double pos = 0, rank_sum = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (truth[k]) {
      pos += 1;
      rank_sum += rank[k];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) throw InputError("AUC needs both positive and negative cases");
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

}  // namespace mfmclust
