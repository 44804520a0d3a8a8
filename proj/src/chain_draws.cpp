#include "mfmclust/chain_draws.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "mfmclust/core_data.hpp"

namespace mfmclust {

std::string format_draw(const Draw& d) {
  std::string line = std::to_string(d.iteration);
  line += '\t';
  const auto& labels = d.partition.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) line += ',';
    line += std::to_string(labels[i]);
  }
  line += '\t';
  line += d.selection.to_string();
  char buf[40];
  std::snprintf(buf, sizeof buf, "\t%.17g", d.log_posterior);
  line += buf;
  return line;
}

Draw parse_draw(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  while (true) {
    const auto tab = line.find('\t');
    fields.push_back(line.substr(0, tab));
    if (tab == std::string_view::npos) break;
    line.remove_prefix(tab + 1);
  }
  if (fields.size() != 4) throw InputError("draw line must have 4 tab-separated fields");
  Draw d;
  auto parse_long = [](std::string_view s, long& v) {
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc{} && end == s.data() + s.size();
  };
  if (!parse_long(fields[0], d.iteration)) throw InputError("bad iteration in draw line");
  std::vector<int> labels;
  std::string_view rest = fields[1];
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    long v = 0;
    if (!parse_long(rest.substr(0, comma), v) || v < 0) throw InputError("bad cluster label in draw line");
    labels.push_back(static_cast<int>(v));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  d.partition = Partition(std::move(labels));
  try {
    d.selection = SelectionIndicator::from_string(std::string(fields[2]));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  d.log_posterior = std::strtod(std::string(fields[3]).c_str(), nullptr);
  return d;
}

void write_draws(std::ostream& out, const std::vector<Draw>& draws) {
  for (const auto& d : draws) out << format_draw(d) << '\n';
}

std::vector<Draw> read_draws(std::istream& in) {
  std::vector<Draw> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_draw(line));
  }
  return out;
}

std::vector<Draw> read_draws_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open draws file '" + path + "'");
  return read_draws(in);
}

}  // namespace mfmclust
