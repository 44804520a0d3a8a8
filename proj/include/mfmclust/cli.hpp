#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfmclust/core_data.hpp"
#include "mfmclust/sampler.hpp"

namespace mfmclust::cli {

/// Bad or incomplete run configuration; the message names the field.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

enum class ModelName { MFMDM, MFMDTM, DPDM, DPDTM };

ModelName parse_model(const std::string& s);
std::string model_string(ModelName m);
bool uses_tree(ModelName m);

/// Everything `fit` needs. Serialises to the flat JSON accepted by --config.
struct RunConfig {
  ModelName model = ModelName::MFMDM;
  std::string counts;
  std::string tree;
  ScaleSpec scale = ScaleSpec::fixed(kDefaultScale);
  double alpha = 1.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double w = 0.5;
  double eta = 1.0;
  double dp_concentration = 1.0;
  McmcConfig mcmc;
  int chains = 1;
  std::string out;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  ModelSpec model_spec() const;

  nlohmann::ordered_json to_json() const;
  /// Unknown keys and wrongly typed values are errors; absent keys keep the
  /// current value.
  void merge_json(const nlohmann::json& j);
};

/// Entry point shared by the executable and the tests. Errors go to `err` as
/// one line of JSON; the return value is the process exit status.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfmclust::cli
