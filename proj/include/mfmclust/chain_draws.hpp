#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mfmclust/partition.hpp"

namespace mfmclust {

struct MoveStats {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

struct AcceptanceStats {
  MoveStats gamma_flip;
  MoveStats gamma_swap;
  MoveStats simple_split;
  MoveStats simple_merge;
  MoveStats restricted_split;
  MoveStats restricted_merge;
};

struct Draw {
  long iteration = 0;
  Partition partition;  // canonical labels
  SelectionIndicator selection;
  double log_posterior = 0;
};

struct ChainDraws {
  std::vector<Draw> draws;
  AcceptanceStats accept;
};

// Draws file: one line per kept draw,
//   <iteration> TAB <comma-separated cluster labels> TAB <0/1 selection> TAB <log posterior>
// with labels in sample order and the selection in feature order.

std::string format_draw(const Draw& d);
Draw parse_draw(std::string_view line);

void write_draws(std::ostream& out, const std::vector<Draw>& draws);
std::vector<Draw> read_draws(std::istream& in);
std::vector<Draw> read_draws_file(const std::string& path);

}  // namespace mfmclust
