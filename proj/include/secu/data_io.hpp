#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "secu/numerics.hpp"

namespace secu {

struct Dataset {
  Mat features;  // N x d_in
  std::optional<std::vector<std::size_t>> labels;
  std::string name;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  // Number of distinct classes (max label + 1), or 0 without labels.
  std::size_t num_classes() const;
  void validate() const;
};

struct GaussianMixtureSpec {
  std::size_t num_components = 10;
  std::size_t per_component = 200;
  std::size_t dim = 32;
  double separation = 10.0;  // minimum pairwise distance between means
  double stddev = 1.0;
};

// Isotropic Gaussian components whose means are pairwise at least `separation`
// apart. Instances are stored component by component. Throws when no feasible
// placement is found within the retry budget.
Dataset gen_gaussian_mixture(const GaussianMixtureSpec& spec, SeededRng& rng);

struct AugmentConfig {
  double noise_sigma = 0.1;
  double mask_prob = 0.1;
  double scale_jitter = 0.1;

  void validate() const;
};

// x + N(0, sigma^2 I), then each coordinate zeroed with probability mask_prob,
// then the whole vector scaled by 1 + U(-jitter, jitter). Draws are consumed in
// that order and skipped entirely for disabled components.
Vec augment(std::span<const double> x, const AugmentConfig& cfg, SeededRng& rng);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class FeatureFormat { kCsv, kBinary };

// Picks the format by extension: ".csv" is text, anything else binary.
FeatureFormat format_for_path(const std::string& path);

// CSV: header row of column names; a final column named "label" holds class ids.
// Binary: "SECF", u32 version, u64 N, u32 d, u8 has_labels, f32 features
// row-major, then u32 labels. Little-endian.
Dataset load_features(const std::string& path);
void save_features(const Dataset& ds, const std::string& path);

Dataset parse_features_csv(const std::string& text);
std::string format_features_csv(const Dataset& ds);
Dataset parse_features_binary(std::span<const unsigned char> bytes);
std::vector<unsigned char> format_features_binary(const Dataset& ds);

}  // namespace secu
