#include "mfmclust/core_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace mfmclust {
namespace {

void require_unique(const std::vector<std::string>& names, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw InputError(std::string("empty ") + what + " name");
    if (!seen.insert(n).second) throw InputError(std::string("duplicate ") + what + " name '" + n + "'");
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cells.push_back(trim(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start)));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cells;
}

}  // namespace

CountMatrix::CountMatrix(CountArray counts, std::vector<std::string> sample_names,
                         std::vector<std::string> feature_names)
    : counts_(std::move(counts)),
      sample_names_(std::move(sample_names)),
      feature_names_(std::move(feature_names)) {
  if (static_cast<Eigen::Index>(sample_names_.size()) != counts_.rows() ||
      static_cast<Eigen::Index>(feature_names_.size()) != counts_.cols())
    throw InputError("count matrix shape does not match its name lists");
  if (counts_.rows() == 0 || counts_.cols() == 0) throw InputError("count matrix is empty");
  require_unique(sample_names_, "sample");
  require_unique(feature_names_, "feature");
  for (Eigen::Index i = 0; i < counts_.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts_.cols(); ++j)
      if (counts_(i, j) < 0)
        throw InputError("negative count at sample '" + sample_names_[i] + "', feature '" +
                         feature_names_[j] + "'");
    if (counts_.row(i).sum() == 0) throw InputError("sample '" + sample_names_[i] + "' has zero total count");
  }
}

CountMatrix parse_count_table(std::string_view text) {
  std::vector<std::vector<std::string_view>> rows;
  std::vector<std::size_t> line_numbers;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;
    rows.push_back(split_tabs(line));
    line_numbers.push_back(line_no);
  }
  if (rows.size() < 2) throw InputError("count table needs a header row and at least one sample row");

  const std::size_t width = rows[1].size();
  if (width < 2) throw InputError("count table rows need a sample name and at least one count");
  auto header = rows[0];
  if (header.size() == width) {
    header.erase(header.begin());
  } else if (header.size() != width - 1) {
    throw InputError("header has " + std::to_string(header.size()) + " cells but rows have " +
                     std::to_string(width));
  }

  std::vector<std::string> features(header.begin(), header.end());
  std::vector<std::string> samples;
  CountArray counts(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(width - 1));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() != width)
      throw InputError("line " + std::to_string(line_numbers[r]) + ": expected " + std::to_string(width) +
                       " cells, found " + std::to_string(cells.size()));
    samples.emplace_back(cells[0]);
    for (std::size_t c = 1; c < width; ++c) {
      const auto cell = cells[c];
      std::int64_t v = 0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || end != cell.data() + cell.size())
        throw InputError("line " + std::to_string(line_numbers[r]) + ", column " + std::to_string(c + 1) +
                         " (sample '" + samples.back() + "', feature '" + features[c - 1] +
                         "'): not an integer: '" + std::string(cell) + "'");
      if (v < 0)
        throw InputError("line " + std::to_string(line_numbers[r]) + ", column " + std::to_string(c + 1) +
                         " (sample '" + samples.back() + "', feature '" + features[c - 1] +
                         "'): negative count " + std::string(cell));
      counts(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) = v;
    }
  }
  return CountMatrix(std::move(counts), std::move(samples), std::move(features));
}

CountMatrix read_count_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open count table '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_count_table(buf.str());
}

std::string format_count_table(const CountMatrix& m) {
  std::ostringstream out;
  out << "sample";
  for (const auto& f : m.feature_names()) out << '\t' << f;
  out << '\n';
  for (Eigen::Index i = 0; i < m.n_samples(); ++i) {
    out << m.sample_names()[i];
    for (Eigen::Index j = 0; j < m.n_features(); ++j) out << '\t' << m(i, j);
    out << '\n';
  }
  return out.str();
}

double resolve_scale(const CountMatrix& m, const ScaleSpec& scale) {
  if (!scale.automatic) {
    if (!(scale.value > 0) || !std::isfinite(scale.value)) throw InputError("scale must be a positive number");
    return scale.value;
  }
  const double depth = static_cast<double>(m.row_sums().maxCoeff());
  // Never inflate counts: shallow tables are left as they are.
  return std::max(1.0, depth / kAutoScaleDepth);
}

CountMatrix rescale_counts(const CountMatrix& m, const ScaleSpec& scale) {
  const double s = resolve_scale(m, scale);
  if (s == 1.0) return m;
  CountArray out(m.n_samples(), m.n_features());
  for (Eigen::Index i = 0; i < m.n_samples(); ++i) {
    for (Eigen::Index j = 0; j < m.n_features(); ++j)
      out(i, j) = static_cast<std::int64_t>(std::floor(static_cast<double>(m(i, j)) / s + 0.5));
    if (out.row(i).sum() == 0)
      throw InputError("sample '" + m.sample_names()[i] + "' has no counts left after dividing by " +
                       std::to_string(s) + "; use a smaller scale");
  }
  return CountMatrix(std::move(out), m.sample_names(), m.feature_names());
}

}  // namespace mfmclust
