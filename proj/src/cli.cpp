#include "mfmclust/cli.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "mfmclust/phylo_tree.hpp"
#include "mfmclust/posterior.hpp"
#include "mfmclust/simgen.hpp"

namespace mfmclust::cli {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

ModelName parse_model(const std::string& s) {
  if (s == "MFMDM") return ModelName::MFMDM;
  if (s == "MFMDTM") return ModelName::MFMDTM;
  if (s == "DPDM") return ModelName::DPDM;
  if (s == "DPDTM") return ModelName::DPDTM;
  throw ConfigError("model: unknown model '" + s + "' (expected MFMDM, MFMDTM, DPDM or DPDTM)");
}

std::string model_string(ModelName m) {
  switch (m) {
    case ModelName::MFMDM: return "MFMDM";
    case ModelName::MFMDTM: return "MFMDTM";
    case ModelName::DPDM: return "DPDM";
    case ModelName::DPDTM: return "DPDTM";
  }
  return "?";
}

bool uses_tree(ModelName m) { return m == ModelName::MFMDTM || m == ModelName::DPDTM; }

void RunConfig::validate() const {
  if (counts.empty()) throw ConfigError("counts: missing required field");
  if (uses_tree(model) && tree.empty()) throw ConfigError("tree: missing required field for model " + model_string(model));
  if (out.empty()) throw ConfigError("out: missing required field");
  if (!scale.automatic && !(scale.value > 0)) throw ConfigError("scale: must be positive or AUTO");
  const std::pair<const char*, double> positive[] = {{"alpha", alpha}, {"beta1", beta1}, {"beta2", beta2},
                                                     {"eta", eta}, {"dp_concentration", dp_concentration}};
  for (const auto& [name, v] : positive)
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError(std::string(name) + ": must be positive");
  if (!(w > 0 && w < 1)) throw ConfigError("w: must lie strictly between 0 and 1");
  if (chains < 1) throw ConfigError("chains: must be at least 1");
  try {
    mcmc.validate();
  } catch (const InputError& e) {
    throw ConfigError(std::string("mcmc: ") + e.what());
  }
}

ModelSpec RunConfig::model_spec() const {
  ModelSpec m;
  m.kernel = uses_tree(model) ? KernelKind::DirichletTreeMultinomial : KernelKind::DirichletMultinomial;
  m.dm = DmHyper{alpha, beta1, beta2, w};
  m.dtm = DtmHyper{alpha, w};
  m.prior.eta = eta;
  m.prior.variant = (model == ModelName::DPDM || model == ModelName::DPDTM) ? PriorVariant::DirichletProcess
                                                                             : PriorVariant::MixtureOfFiniteMixtures;
  m.prior.dp_concentration = dp_concentration;
  return m;
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["model"] = model_string(model);
  j["counts"] = counts;
  if (!tree.empty()) j["tree"] = tree;
  if (scale.automatic)
    j["scale"] = "AUTO";
  else
    j["scale"] = scale.value;
  j["alpha"] = alpha;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["w"] = w;
  j["eta"] = eta;
  j["dp_concentration"] = dp_concentration;
  j["iterations"] = mcmc.iterations;
  j["burn_in"] = mcmc.burn_in;
  j["thin"] = mcmc.thinning;
  j["gamma_moves"] = mcmc.gamma_moves_per_iter;
  j["launch_scans"] = mcmc.launch_scans;
  if (mcmc.initial_inclusion)
    j["initial_inclusion"] = *mcmc.initial_inclusion;
  else
    j["initial_inclusion"] = nullptr;
  j["seed"] = mcmc.seed;
  j["chains"] = chains;
  j["out"] = out;
  return j;
}

namespace {

template <class T>
T get_field(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(key + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
          throw ConfigError(key + ": must be non-negative");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(key + ": expected a number");
    } else {
      if (!v.is_string()) throw ConfigError(key + ": expected a string");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

ScaleSpec parse_scale(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "AUTO" || s == "auto") return ScaleSpec::auto_depth();
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used == s.size()) return ScaleSpec::fixed(x);
    } catch (const std::exception&) {
    }
    throw ConfigError("scale: expected a number or AUTO, got '" + s + "'");
  }
  return ScaleSpec::fixed(get_field<double>(v, "scale"));
}

}  // namespace

void RunConfig::merge_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a flat JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "model") model = parse_model(get_field<std::string>(v, key));
    else if (key == "counts") counts = get_field<std::string>(v, key);
    else if (key == "tree") tree = get_field<std::string>(v, key);
    else if (key == "scale") scale = parse_scale(v);
    else if (key == "alpha") alpha = get_field<double>(v, key);
    else if (key == "beta1") beta1 = get_field<double>(v, key);
    else if (key == "beta2") beta2 = get_field<double>(v, key);
    else if (key == "w") w = get_field<double>(v, key);
    else if (key == "eta") eta = get_field<double>(v, key);
    else if (key == "dp_concentration") dp_concentration = get_field<double>(v, key);
    else if (key == "iterations") mcmc.iterations = get_field<long>(v, key);
    else if (key == "burn_in") mcmc.burn_in = get_field<long>(v, key);
    else if (key == "thin") mcmc.thinning = get_field<long>(v, key);
    else if (key == "gamma_moves") mcmc.gamma_moves_per_iter = get_field<int>(v, key);
    else if (key == "launch_scans") mcmc.launch_scans = get_field<int>(v, key);
    else if (key == "initial_inclusion")
      mcmc.initial_inclusion = v.is_null() ? std::nullopt : std::optional<double>(get_field<double>(v, key));
    else if (key == "seed") mcmc.seed = get_field<std::uint64_t>(v, key);
    else if (key == "chains") chains = get_field<int>(v, key);
    else if (key == "out") out = get_field<std::string>(v, key);
    else throw ConfigError(key + ": unknown configuration field");
  }
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
}

/// Files written by a command; removed again unless commit() is reached.
class OutputGuard {
 public:
  explicit OutputGuard(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    }
  }
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  fs::path file(const std::string& name) {
    auto p = dir_ / name;
    files_.push_back(p);
    return p;
  }

  void write(const std::string& name, const std::string& content) {
    const auto p = file(name);
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw InputError("cannot write '" + p.string() + "'");
  }

  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_dir_ = false;
  bool committed_ = false;
};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        out.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

/// Two-column CSV with a header row, returned as (key, value) pairs in file order.
std::vector<std::pair<std::string, std::string>> read_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != 2) throw InputError(path + ": line " + std::to_string(line_no) + ": expected 2 columns");
    rows.emplace_back(std::move(f[0]), std::move(f[1]));
  }
  if (rows.empty()) throw InputError(path + ": no data rows");
  return rows;
}

double to_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError(where + ": '" + s + "' is not a number");
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string preset = "desk";
  int z = 5;
  std::uint64_t seed = 1;
  std::optional<int> n_per_group;
  std::optional<int> depth;
  std::optional<double> concentration;
  std::optional<double> shift;
  std::string profile;
  std::string out;
};

/// Profile CSV: feature,probability,set with set one of psi, lambda or empty.
void load_profile(const std::string& path, ScenarioSpec& spec) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open profile '" + path + "'");
  std::string line;
  std::vector<double> probs;
  int line_no = 0;
  spec.psi.clear();
  spec.lambda.clear();
  spec.feature_names.clear();
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() == 2) f.emplace_back();
    if (f.size() != 3) throw InputError(path + ": line " + std::to_string(line_no) + ": expected feature,probability,set");
    const int j = static_cast<int>(probs.size());
    spec.feature_names.push_back(f[0]);
    probs.push_back(to_number(f[1], path + ": line " + std::to_string(line_no)));
    if (f[2] == "psi") spec.psi.push_back(j);
    else if (f[2] == "lambda") spec.lambda.push_back(j);
    else if (!f[2].empty()) throw InputError(path + ": line " + std::to_string(line_no) + ": set must be psi, lambda or empty");
  }
  spec.base_profile = Eigen::Map<Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));
  const double total = spec.base_profile.sum();
  if (total > 0) spec.base_profile /= total;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.out.empty()) throw ConfigError("out: missing required field");
  ScenarioSpec spec;
  if (a.preset == "desk")
    spec = desk_scenario(a.z, a.seed);
  else if (a.preset == "full")
    spec = full_scenario(a.z, a.seed);
  else
    throw ConfigError("preset: expected desk or full");
  if (!a.profile.empty()) load_profile(a.profile, spec);
  if (a.n_per_group) spec.n_per_group = *a.n_per_group;
  if (a.depth) spec.depth = *a.depth;
  if (a.concentration) spec.concentration_sum = *a.concentration;
  if (a.shift) spec.shift_override = *a.shift;
  spec.validate();

  const auto data = generate_scenario(spec);
  std::mt19937_64 tree_rng(a.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto tree = random_binary_tree(data.counts.feature_names(), tree_rng);

  OutputGuard guard(a.out);
  guard.write("counts.tsv", format_count_table(data.counts));
  std::string labels = "sample,group\n";
  for (int i = 0; i < data.group_labels.size(); ++i)
    labels += csv_field(data.counts.sample_names()[static_cast<std::size_t>(i)]) + ',' +
              std::to_string(data.group_labels[i]) + '\n';
  guard.write("labels.csv", labels);
  std::string truth = "feature,informative\n";
  for (std::size_t j = 0; j < data.informative_truth.size(); ++j)
    truth += csv_field(data.counts.feature_names()[j]) + ',' + (data.informative_truth[j] ? "1" : "0") + '\n';
  guard.write("truth.csv", truth);
  guard.write("tree.nwk", to_newick(tree) + '\n');

  ordered_json manifest;
  manifest["preset"] = a.preset;
  manifest["z"] = spec.z;
  manifest["shift"] = spec.shift();
  manifest["seed"] = spec.seed;
  manifest["n_per_group"] = spec.n_per_group;
  manifest["depth"] = spec.depth;
  manifest["concentration_sum"] = spec.concentration_sum;
  if (!a.profile.empty()) manifest["profile"] = a.profile;
  manifest["n_features"] = spec.base_profile.size();
  manifest["psi_size"] = spec.psi.size();
  manifest["lambda_size"] = spec.lambda.size();
  guard.write("scenario.json", manifest.dump(2) + '\n');
  guard.commit();
  out << ordered_json{{"out", a.out}, {"samples", data.counts.n_samples()}, {"features", data.counts.n_features()}}.dump()
      << '\n';
  return 0;
}

// --------------------------------------------------------------------- fit

std::string draws_name(int chain, int n_chains) {
  return n_chains == 1 ? std::string("draws.txt") : "draws.chain" + std::to_string(chain + 1) + ".txt";
}

ordered_json acceptance_json(const AcceptanceStats& a) {
  auto one = [](const MoveStats& m) { return ordered_json{{"proposed", m.proposed}, {"accepted", m.accepted}, {"rate", m.rate()}}; };
  return ordered_json{{"gamma_add_delete", one(a.gamma_flip)},     {"gamma_swap", one(a.gamma_swap)},
                      {"simple_split", one(a.simple_split)},       {"simple_merge", one(a.simple_merge)},
                      {"restricted_split", one(a.restricted_split)}, {"restricted_merge", one(a.restricted_merge)}};
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto raw = read_count_table(cfg.counts);
  std::optional<PhyloTree> tree;
  if (uses_tree(cfg.model)) tree = read_newick(cfg.tree);
  const double scale = resolve_scale(raw, cfg.scale);
  const auto data = rescale_counts(raw, ScaleSpec::fixed(scale));
  const auto spec = cfg.model_spec();
  if (tree) propagate_tree_counts(data, *tree);  // surface label mismatches before any chain starts

  std::vector<ChainDraws> results(static_cast<std::size_t>(cfg.chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.chains));
  auto run_one = [&](int c) {
    try {
      auto mc = cfg.mcmc;
      mc.seed = cfg.mcmc.seed + static_cast<std::uint64_t>(c);
      results[static_cast<std::size_t>(c)] = run_mcmc(data, tree ? &*tree : nullptr, spec, mc);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };
  if (cfg.chains == 1) {
    run_one(0);
  } else {
    std::vector<std::thread> workers;
    for (int c = 0; c < cfg.chains; ++c) workers.emplace_back(run_one, c);
    for (auto& t : workers) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  OutputGuard guard(cfg.out);
  ordered_json chains = ordered_json::array();
  for (int c = 0; c < cfg.chains; ++c) {
    const auto name = draws_name(c, cfg.chains);
    std::ostringstream buf;
    write_draws(buf, results[static_cast<std::size_t>(c)].draws);
    guard.write(name, buf.str());
    chains.push_back(ordered_json{{"draws", name},
                                  {"seed", cfg.mcmc.seed + static_cast<std::uint64_t>(c)},
                                  {"n_draws", results[static_cast<std::size_t>(c)].draws.size()},
                                  {"acceptance", acceptance_json(results[static_cast<std::size_t>(c)].accept)}});
  }

  ordered_json manifest;
  manifest["config"] = cfg.to_json();
  manifest["seed"] = cfg.mcmc.seed;
  manifest["resolved_scale"] = scale;
  manifest["kernel"] = uses_tree(cfg.model) ? "DTM" : "DM";
  manifest["samples"] = data.sample_names();
  if (tree) {
    std::vector<std::string> paths;
    for (int id : tree->internal_nodes()) paths.push_back(tree->node_path(id));
    manifest["features"] = paths;
  } else {
    manifest["features"] = data.feature_names();
  }
  manifest["chains"] = chains;
  manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  guard.write("manifest.json", manifest.dump(2) + '\n');
  guard.commit();
  out << ordered_json{{"out", cfg.out}, {"chains", cfg.chains}, {"draws", chains.front()["n_draws"]}}.dump() << '\n';
  return 0;
}

// --------------------------------------------------------------- summarize

void check_coclustering(const CoClusteringMatrix& z) {
  const auto& m = z.zeta;
  if (m.rows() != m.cols()) throw std::logic_error("co-clustering matrix is not square");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 1.0) throw std::logic_error("co-clustering diagonal is not one");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (m(i, j) != m(j, i)) throw std::logic_error("co-clustering matrix is not symmetric");
      if (m(i, j) < 0 || m(i, j) > 1) throw std::logic_error("co-clustering entry outside [0, 1]");
    }
  }
}

int cmd_summarize(const std::string& run_dir, std::string out_dir, std::ostream& out) {
  if (run_dir.empty()) throw ConfigError("run: missing required field");
  if (out_dir.empty()) out_dir = run_dir;
  const fs::path run(run_dir);
  const auto manifest = read_json_file((run / "manifest.json").string());
  std::vector<Draw> draws;
  try {
    for (const auto& chain : manifest.at("chains")) {
      auto part = read_draws_file((run / chain.at("draws").get<std::string>()).string());
      draws.insert(draws.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("manifest.json: ") + e.what());
  }
  if (draws.empty()) throw InputError("no draws to summarize");
  const auto samples = manifest.at("samples").get<std::vector<std::string>>();
  const auto features = manifest.at("features").get<std::vector<std::string>>();
  const bool tree_kernel = manifest.at("kernel").get<std::string>() == "DTM";
  for (const auto& d : draws) {
    if (d.partition.size() != static_cast<int>(samples.size()) || d.selection.size() != static_cast<int>(features.size()))
      throw InputError("draws do not match the manifest's sample or feature count");
  }

  const auto z = coclustering(std::span<const Draw>(draws));
  check_coclustering(z);
  const auto est = summarize_partition(std::span<const Draw>(draws), z);
  const auto freq = selection_frequencies(std::span<const Draw>(draws));

  OutputGuard guard(out_dir);
  std::string zc;
  for (const auto& s : samples) zc += ',' + csv_field(s);
  zc += '\n';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    zc += csv_field(samples[i]);
    for (std::size_t j = 0; j < samples.size(); ++j)
      zc += ',' + fmt_double(z.zeta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    zc += '\n';
  }
  guard.write("coclustering.csv", zc);
  std::string pc = "sample,cluster\n";
  for (std::size_t i = 0; i < samples.size(); ++i)
    pc += csv_field(samples[i]) + ',' + std::to_string(est.labels[static_cast<int>(i)]) + '\n';
  guard.write("partition.csv", pc);
  std::string sc = tree_kernel ? "node,frequency\n" : "feature,frequency\n";
  for (std::size_t j = 0; j < features.size(); ++j)
    sc += csv_field(features[j]) + ',' + fmt_double(freq[static_cast<Eigen::Index>(j)]) + '\n';
  guard.write(tree_kernel ? "node_selection.csv" : "selection.csv", sc);
  ordered_json summary{{"n_draws", draws.size()},
                       {"n_clusters", est.labels.n_clusters()},
                       {"adjusted_rand_to_coclustering", est.score},
                       {"estimate_iteration", draws[static_cast<std::size_t>(est.candidate_index)].iteration}};
  guard.write("summary.json", summary.dump(2) + '\n');
  guard.commit();
  out << summary.dump() << '\n';
  return 0;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const std::string& estimate, const std::string& labels, const std::string& frequencies,
             const std::string& truth, std::ostream& out) {
  if (estimate.empty() != labels.empty()) throw ConfigError("estimate/labels: both are needed for adjusted Rand");
  if (frequencies.empty() != truth.empty()) throw ConfigError("frequencies/truth: both are needed for AUC");
  if (estimate.empty() && frequencies.empty()) throw ConfigError("eval: give --estimate/--labels and/or --frequencies/--truth");
  ordered_json result;
  if (!estimate.empty()) {
    const auto est = read_pairs(estimate);
    const auto ref = read_pairs(labels);
    std::map<std::string, std::string> ref_map(ref.begin(), ref.end());
    if (ref_map.size() != est.size()) throw InputError("estimate and labels list different samples");
    std::vector<int> a, b;
    std::map<std::string, int> ids_a, ids_b;
    for (const auto& [name, lab] : est) {
      const auto it = ref_map.find(name);
      if (it == ref_map.end()) throw InputError("sample '" + name + "' missing from " + labels);
      a.push_back(ids_a.try_emplace(lab, static_cast<int>(ids_a.size())).first->second);
      b.push_back(ids_b.try_emplace(it->second, static_cast<int>(ids_b.size())).first->second);
    }
    result["adjusted_rand"] = adjusted_rand(Partition(a), Partition(b));
  }
  if (!frequencies.empty()) {
    const auto freq = read_pairs(frequencies);
    const auto tr = read_pairs(truth);
    std::map<std::string, std::string> truth_map(tr.begin(), tr.end());
    if (truth_map.size() != freq.size()) throw InputError("frequencies and truth list different features");
    Eigen::VectorXd scores(static_cast<Eigen::Index>(freq.size()));
    std::vector<std::uint8_t> labels01;
    for (std::size_t j = 0; j < freq.size(); ++j) {
      const auto it = truth_map.find(freq[j].first);
      if (it == truth_map.end()) throw InputError("feature '" + freq[j].first + "' missing from " + truth);
      scores[static_cast<Eigen::Index>(j)] = to_number(freq[j].second, frequencies);
      if (it->second != "0" && it->second != "1") throw InputError(truth + ": truth values must be 0 or 1");
      labels01.push_back(it->second == "1");
    }
    result["auc"] = roc_auc(scores, labels01);
  }
  out << result.dump() << '\n';
  return 0;
}

void report(std::ostream& err, const char* kind, const std::string& message) {
  err << ordered_json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian clustering of microbiome count tables with feature selection", "mfmclust"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic two-group dataset");
  simulate->add_option("--preset", sim.preset, "desk or full")->capture_default_str();
  simulate->add_option("--z", sim.z, "Scenario 1..5; the shifted fraction is z/5")->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--n-per-group", sim.n_per_group);
  simulate->add_option("--depth", sim.depth);
  simulate->add_option("--concentration", sim.concentration, "Dirichlet concentration sum");
  simulate->add_option("--shift", sim.shift, "Override the shifted fraction");
  simulate->add_option("--profile", sim.profile, "CSV feature,probability,set replacing the preset profile");
  simulate->add_option("--out", sim.out, "Output directory")->required();

  std::string config_path, model, counts, tree, scale;
  std::optional<double> alpha, beta1, beta2, w, eta, dp, initial_inclusion;
  std::optional<long> iterations, burn_in, thin;
  std::optional<int> gamma_moves, launch_scans, chains;
  std::optional<std::uint64_t> seed;
  std::string fit_out;
  auto* fit = app.add_subcommand("fit", "Run the sampler");
  fit->add_option("--config", config_path, "Flat JSON configuration; flags override it");
  fit->add_option("--model", model, "MFMDM, MFMDTM, DPDM or DPDTM");
  fit->add_option("--counts", counts, "Count table (TSV)");
  fit->add_option("--tree", tree, "Newick tree (tree models)");
  fit->add_option("--scale", scale, "Count divisor or AUTO (default 50)");
  fit->add_option("--iterations", iterations);
  fit->add_option("--burn-in", burn_in);
  fit->add_option("--thin", thin);
  fit->add_option("--seed", seed);
  fit->add_option("--chains", chains, "Independent chains, run concurrently");
  fit->add_option("--out", fit_out, "Output directory");
  fit->add_option("--alpha", alpha);
  fit->add_option("--beta1", beta1);
  fit->add_option("--beta2", beta2);
  fit->add_option("--w", w, "Prior inclusion probability");
  fit->add_option("--eta", eta);
  fit->add_option("--dp-concentration", dp);
  fit->add_option("--gamma-moves", gamma_moves, "Selection updates per iteration");
  fit->add_option("--launch-scans", launch_scans, "Restricted Gibbs scans per split-merge proposal");
  fit->add_option("--initial-inclusion", initial_inclusion, "Start from a random selection at this rate instead of the abundant features");

  std::string run_dir, summary_out;
  auto* summarize = app.add_subcommand("summarize", "Posterior summaries of a fit");
  summarize->add_option("--run", run_dir, "Directory written by fit")->required();
  summarize->add_option("--out", summary_out, "Output directory (default: the run directory)");

  std::string estimate, labels, frequencies, truth;
  auto* eval = app.add_subcommand("eval", "Score summaries against known truth");
  eval->add_option("--estimate", estimate, "partition.csv from summarize");
  eval->add_option("--labels", labels, "labels.csv from simulate");
  eval->add_option("--frequencies", frequencies, "selection.csv from summarize");
  eval->add_option("--truth", truth, "truth.csv from simulate");

  std::vector<std::string> argv_store{"mfmclust"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what());
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (fit->parsed()) {
      RunConfig cfg;
      if (!config_path.empty()) cfg.merge_json(read_json_file(config_path));
      json flags = json::object();
      if (!model.empty()) flags["model"] = model;
      if (!counts.empty()) flags["counts"] = counts;
      if (!tree.empty()) flags["tree"] = tree;
      if (!scale.empty()) flags["scale"] = scale;
      if (!fit_out.empty()) flags["out"] = fit_out;
      if (alpha) flags["alpha"] = *alpha;
      if (beta1) flags["beta1"] = *beta1;
      if (beta2) flags["beta2"] = *beta2;
      if (w) flags["w"] = *w;
      if (eta) flags["eta"] = *eta;
      if (dp) flags["dp_concentration"] = *dp;
      if (iterations) flags["iterations"] = *iterations;
      if (burn_in) flags["burn_in"] = *burn_in;
      if (thin) flags["thin"] = *thin;
      if (seed) flags["seed"] = *seed;
      if (chains) flags["chains"] = *chains;
      if (gamma_moves) flags["gamma_moves"] = *gamma_moves;
      if (launch_scans) flags["launch_scans"] = *launch_scans;
      if (initial_inclusion) flags["initial_inclusion"] = *initial_inclusion;
      cfg.merge_json(flags);
      return cmd_fit(cfg, out);
    }
    if (summarize->parsed()) return cmd_summarize(run_dir, summary_out, out);
    if (eval->parsed()) return cmd_eval(estimate, labels, frequencies, truth, out);
  } catch (const ConfigError& e) {
    report(err, "config", e.what());
    return 2;
  } catch (const InputError& e) {
    report(err, "input", e.what());
    return 3;
  } catch (const std::exception& e) {
    report(err, "internal", e.what());
    return 4;
  }
  return 2;
}

}  // namespace mfmclust::cli
