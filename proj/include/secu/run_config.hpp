#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "secu/data_io.hpp"
#include "secu/trainer.hpp"

namespace secu {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DataSpec {
  // "gaussian" generates a mixture; anything else is a feature file path.
  std::string source;
  GaussianMixtureSpec gaussian;
  bool generated() const { return source == "gaussian"; }
};

// Everything one command needs. Seeds and the output directory may also come
// from command-line flags, which take precedence.
struct RunConfig {
  DataSpec data;
  TrainConfig train;
  std::optional<std::string> out_dir;
  std::uint64_t seed = 0;
  // Entropy mode without an explicit alpha: use 6N/50 once N is known.
  bool default_alpha = false;
};

// INI text with [data], [train], [constraint], [augment] and [run] sections.
// Unknown sections or keys, malformed values and missing required keys
// (data.source, train.epochs, constraint.mode) raise ConfigError. Relative data
// paths resolve against base_dir and must exist.
RunConfig parse_run_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

// Loads or generates the dataset. Generated data draws from its own stream of `seed`.
Dataset load_dataset(const DataSpec& spec, std::uint64_t seed);

// Training settings for a concrete dataset: seed applied, alpha filled in when defaulted.
TrainConfig resolve_train_config(const RunConfig& rc, const Dataset& data);

}  // namespace secu
