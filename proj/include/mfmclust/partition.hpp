#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mfmclust {

/// Cluster assignment of N samples. Labels are arbitrary non-negative ints;
/// canonical() renumbers them 0..K-1 by first appearance so that two
/// partitions are equal as set partitions iff their canonical forms match.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<int> labels) : labels_(std::move(labels)) {}

  static Partition single_cluster(int n) { return Partition(std::vector<int>(static_cast<std::size_t>(n), 0)); }

  int size() const { return static_cast<int>(labels_.size()); }
  int operator[](int i) const { return labels_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& labels() const { return labels_; }

  Partition canonical() const;
  int n_clusters() const;
  /// Sizes of the clusters in canonical order.
  std::vector<int> cluster_sizes() const;

  friend bool operator==(const Partition& a, const Partition& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<int> labels_;
};

/// Binary inclusion vector over features (OTUs or internal tree nodes).
class SelectionIndicator {
 public:
  SelectionIndicator() = default;
  explicit SelectionIndicator(std::vector<std::uint8_t> bits);
  static SelectionIndicator all(int n) { return SelectionIndicator(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1)); }
  static SelectionIndicator from_string(const std::string& bits);

  int size() const { return static_cast<int>(bits_.size()); }
  int count() const { return count_; }
  bool operator[](int j) const { return bits_[static_cast<std::size_t>(j)] != 0; }
  void flip(int j);
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::string to_string() const;

  friend bool operator==(const SelectionIndicator& a, const SelectionIndicator& b) { return a.bits_ == b.bits_; }

 private:
  std::vector<std::uint8_t> bits_;
  int count_ = 0;
};

}  // namespace mfmclust
