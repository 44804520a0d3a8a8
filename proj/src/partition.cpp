#include "mfmclust/partition.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace mfmclust {

Partition Partition::canonical() const {
  std::unordered_map<int, int> relabel;
  std::vector<int> out;
  out.reserve(labels_.size());
  for (int l : labels_) out.push_back(relabel.try_emplace(l, static_cast<int>(relabel.size())).first->second);
  return Partition(std::move(out));
}

int Partition::n_clusters() const {
  std::vector<int> seen(labels_);
  std::sort(seen.begin(), seen.end());
  return static_cast<int>(std::unique(seen.begin(), seen.end()) - seen.begin());
}

std::vector<int> Partition::cluster_sizes() const {
  const auto c = canonical();
  std::vector<int> sizes;
  for (int l : c.labels_) {
    if (l >= static_cast<int>(sizes.size())) sizes.resize(static_cast<std::size_t>(l) + 1, 0);
    ++sizes[static_cast<std::size_t>(l)];
  }
  return sizes;
}

SelectionIndicator::SelectionIndicator(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) {
    b = b ? 1 : 0;
    count_ += b;
  }
}

SelectionIndicator SelectionIndicator::from_string(const std::string& bits) {
  std::vector<std::uint8_t> out;
  out.reserve(bits.size());
  for (char ch : bits) {
    if (ch != '0' && ch != '1') throw std::invalid_argument("selection bitstring must contain only 0 and 1");
    out.push_back(ch == '1');
  }
  return SelectionIndicator(std::move(out));
}

void SelectionIndicator::flip(int j) {
  auto& b = bits_[static_cast<std::size_t>(j)];
  count_ += b ? -1 : 1;
  b ^= 1;
}

std::string SelectionIndicator::to_string() const {
  std::string out(bits_.size(), '0');
  for (std::size_t j = 0; j < bits_.size(); ++j)
    if (bits_[j]) out[j] = '1';
  return out;
}

}  // namespace mfmclust
