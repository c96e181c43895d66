#include "secu/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace secu {

namespace {

namespace pt = boost::property_tree;

constexpr std::uint64_t kDataSeedStream = 7;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  try {
    std::size_t used = 0;
    const double d = std::stod(t, &used);
    if (used == t.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_size(key, item));
  return out;
}

template <typename F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config syntax: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  RunConfig rc;
  TrainConfig& t = rc.train;
  ConstraintConfig& c = t.constraint;
  bool warmup_given = false;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"data.source", [&](auto&, auto& v) { rc.data.source = trim(v); }},
      {"data.components", [&](auto& k, auto& v) { rc.data.gaussian.num_components = to_size(k, v); }},
      {"data.per_component", [&](auto& k, auto& v) { rc.data.gaussian.per_component = to_size(k, v); }},
      {"data.dim", [&](auto& k, auto& v) { rc.data.gaussian.dim = to_size(k, v); }},
      {"data.separation", [&](auto& k, auto& v) { rc.data.gaussian.separation = to_double(k, v); }},
      {"data.stddev", [&](auto& k, auto& v) { rc.data.gaussian.stddev = to_double(k, v); }},
      {"train.epochs", [&](auto& k, auto& v) { t.epochs = to_size(k, v); }},
      {"train.batch_size", [&](auto& k, auto& v) { t.batch_size = to_size(k, v); }},
      {"train.tau", [&](auto& k, auto& v) { t.tau = to_double(k, v); }},
      {"train.lambda", [&](auto& k, auto& v) { t.lambda = to_double(k, v); }},
      {"train.lambda_centers", [&](auto& k, auto& v) { t.lambda_centers = to_double(k, v); }},
      {"train.center_mode", [&](auto& k, auto& v) { t.center_mode = wrap(k, [&] { return parse_center_mode(trim(v)); }); }},
      {"train.center_seeding", [&](auto& k, auto& v) { t.center_seeding = wrap(k, [&] { return parse_center_seeding(trim(v)); }); }},
      {"train.lr_encoder", [&](auto& k, auto& v) { t.lr_encoder.base_lr = to_double(k, v); }},
      {"train.warmup_epochs", [&](auto& k, auto& v) { t.lr_encoder.warmup_epochs = to_size(k, v); warmup_given = true; }},
      {"train.encoder_momentum", [&](auto& k, auto& v) { t.encoder_momentum = to_double(k, v); }},
      {"train.lr_centers", [&](auto& k, auto& v) { t.lr_centers = to_double(k, v); }},
      {"train.center_momentum", [&](auto& k, auto& v) { t.center_momentum = to_double(k, v); }},
      {"train.heads", [&](auto& k, auto& v) { t.heads = to_sizes(k, v); }},
      {"train.auxiliary_heads", [&](auto& k, auto& v) { t.auxiliary_heads = to_bool(k, v); }},
      {"train.hidden_dims", [&](auto& k, auto& v) { t.hidden_dims = trim(v).empty() ? std::vector<std::size_t>{} : to_sizes(k, v); }},
      {"train.embedding_dim", [&](auto& k, auto& v) { t.embedding_dim = to_size(k, v); }},
      {"constraint.mode", [&](auto& k, auto& v) { c.mode = wrap(k, [&] { return parse_constraint_mode(trim(v)); }); }},
      {"constraint.gamma", [&](auto& k, auto& v) { c.gamma = to_double(k, v); }},
      {"constraint.gamma_upper", [&](auto& k, auto& v) { c.gamma_upper = to_double(k, v); }},
      {"constraint.alpha", [&](auto& k, auto& v) { c.alpha = to_double(k, v); }},
      {"constraint.dual_lr", [&](auto& k, auto& v) { c.dual_lr = to_double(k, v); }},
      {"constraint.logit_scores", [&](auto& k, auto& v) { c.logit_scores = to_bool(k, v); }},
      {"constraint.reset_duals", [&](auto& k, auto& v) { c.reset_duals = to_bool(k, v); }},
      {"augment.noise_sigma", [&](auto& k, auto& v) { t.augment.noise_sigma = to_double(k, v); }},
      {"augment.mask_prob", [&](auto& k, auto& v) { t.augment.mask_prob = to_double(k, v); }},
      {"augment.scale_jitter", [&](auto& k, auto& v) { t.augment.scale_jitter = to_double(k, v); }},
      {"run.seed", [&](auto& k, auto& v) { rc.seed = to_u64(k, v); }},
      {"run.out", [&](auto&, auto& v) { rc.out_dir = trim(v); }},
  };

  std::set<std::string> seen;
  bool alpha_given = false;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = setters.find(full);
      if (it == setters.end()) throw ConfigError("unknown config key '" + full + "'");
      it->second(full, value.data());
      seen.insert(full);
      if (full == "constraint.alpha") alpha_given = true;
    }
  }
  for (const char* required : {"data.source", "train.epochs", "constraint.mode"}) {
    if (!seen.count(required)) throw ConfigError(std::string("missing required key '") + required + "'");
  }
  if (rc.data.source.empty()) throw ConfigError("data.source: must not be empty");

  t.lr_encoder.total_epochs = t.epochs;
  if (!warmup_given) t.lr_encoder.warmup_epochs = std::min<std::size_t>(t.lr_encoder.warmup_epochs, t.epochs);

  if (!rc.data.generated()) {
    std::filesystem::path p(rc.data.source);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    if (!std::filesystem::is_regular_file(p)) {
      throw ConfigError("data.source: no such file '" + p.string() + "'");
    }
    rc.data.source = p.string();
  }
  rc.default_alpha = c.mode == ConstraintMode::kEntropy && !alpha_given;
  if (rc.default_alpha && rc.data.generated()) {
    c.alpha = default_alpha(rc.data.gaussian.num_components * rc.data.gaussian.per_component);
  }
  wrap("train", [&] { t.validate(); });
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_run_config(ss.str(), dir.empty() ? "." : dir.string());
}

Dataset load_dataset(const DataSpec& spec, std::uint64_t seed) {
  if (spec.generated()) {
    SeededRng rng = SeededRng(seed).split(kDataSeedStream);
    Dataset ds = gen_gaussian_mixture(spec.gaussian, rng);
    ds.name = "gaussian";
    return ds;
  }
  return load_features(spec.source);
}

TrainConfig resolve_train_config(const RunConfig& rc, const Dataset& data) {
  TrainConfig t = rc.train;
  t.seed = rc.seed;
  if (rc.default_alpha) t.constraint.alpha = default_alpha(data.size());
  return t;
}

}  // namespace secu
