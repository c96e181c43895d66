#include "secu/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace secu {

namespace {

constexpr char kMagic[4] = {'S', 'E', 'C', 'F'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "feature files are written with native little-endian layout");

template <typename T>
void put(std::vector<unsigned char>& out, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) {
      throw ParseError(std::string("truncated feature file while reading ") + what, pos_);
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::size_t Dataset::num_classes() const {
  if (!labels || labels->empty()) return 0;
  return *std::max_element(labels->begin(), labels->end()) + 1;
}

void Dataset::validate() const {
  if (!all_finite(features.values())) throw NumericError("dataset '" + name + "' has non-finite features");
  if (labels && labels->size() != features.rows()) {
    throw ShapeError("dataset '" + name + "' has " + std::to_string(labels->size()) + " labels for " +
                     std::to_string(features.rows()) + " rows");
  }
}

Dataset gen_gaussian_mixture(const GaussianMixtureSpec& spec, SeededRng& rng) {
  if (!(spec.separation > 0.0)) throw std::invalid_argument("gen_gaussian_mixture: separation must be positive");
  if (spec.num_components == 0 || spec.dim == 0) {
    throw std::invalid_argument("gen_gaussian_mixture: need at least one component and dimension");
  }
  constexpr int kTriesPerMean = 1000;
  constexpr int kRestarts = 50;
  const std::size_t k = spec.num_components;
  const std::size_t d = spec.dim;
  // Coordinates ~ N(0, s^2) give typical pairwise distance s sqrt(2d).
  const double s = 1.5 * spec.separation / std::sqrt(2.0 * static_cast<double>(d));

  Mat means(k, d);
  bool placed = false;
  for (int restart = 0; restart < kRestarts && !placed; ++restart) {
    std::size_t done = 0;
    for (; done < k; ++done) {
      bool ok = false;
      for (int t = 0; t < kTriesPerMean && !ok; ++t) {
        auto row = means.row(done);
        for (double& v : row) v = s * rng.normal();
        ok = true;
        for (std::size_t q = 0; q < done && ok; ++q) {
          double dist2 = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            const double diff = row[c] - means(q, c);
            dist2 += diff * diff;
          }
          ok = std::sqrt(dist2) >= spec.separation;
        }
      }
      if (!ok) break;
    }
    placed = done == k;
  }
  if (!placed) {
    throw std::runtime_error("gen_gaussian_mixture: could not place " + std::to_string(k) +
                             " means at separation " + std::to_string(spec.separation));
  }

  Dataset ds;
  ds.name = "gaussian_mixture";
  ds.features = Mat(k * spec.per_component, d);
  ds.labels = std::vector<std::size_t>(k * spec.per_component);
  std::size_t row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < spec.per_component; ++i, ++row) {
      auto x = ds.features.row(row);
      for (std::size_t q = 0; q < d; ++q) x[q] = means(c, q) + spec.stddev * rng.normal();
      (*ds.labels)[row] = c;
    }
  }
  return ds;
}

void AugmentConfig::validate() const {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("augment: noise_sigma must be >= 0");
  if (!(mask_prob >= 0.0 && mask_prob < 1.0)) throw std::invalid_argument("augment: mask_prob must lie in [0, 1)");
  if (!(scale_jitter >= 0.0)) throw std::invalid_argument("augment: scale_jitter must be >= 0");
}

Vec augment(std::span<const double> x, const AugmentConfig& cfg, SeededRng& rng) {
  Vec out(x.begin(), x.end());
  if (cfg.noise_sigma > 0.0) {
    for (double& v : out) v += cfg.noise_sigma * rng.normal();
  }
  if (cfg.mask_prob > 0.0) {
    for (double& v : out) {
      if (rng.bernoulli(cfg.mask_prob)) v = 0.0;
    }
  }
  if (cfg.scale_jitter > 0.0) {
    const double scale = 1.0 + rng.uniform(-cfg.scale_jitter, cfg.scale_jitter);
    for (double& v : out) v *= scale;
  }
  return out;
}

FeatureFormat format_for_path(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos) {
    std::string ext = path.substr(dot);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".csv") return FeatureFormat::kCsv;
  }
  return FeatureFormat::kBinary;
}

std::string format_features_csv(const Dataset& ds) {
  std::string out;
  for (std::size_t c = 0; c < ds.dim(); ++c) {
    if (c) out += ',';
    out += "f" + std::to_string(c);
  }
  if (ds.labels) out += ",label";
  out += '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c = 0; c < ds.dim(); ++c) {
      if (c) out += ',';
      out += format_double(ds.features(i, c));
    }
    if (ds.labels) out += "," + std::to_string((*ds.labels)[i]);
    out += '\n';
  }
  return out;
}

Dataset parse_features_csv(const std::string& text) {
  std::size_t pos = 0;
  auto next_line = [&](std::string& line, std::size_t& start) {
    if (pos >= text.size()) return false;
    start = pos;
    const auto nl = text.find('\n', pos);
    const std::size_t end = nl == std::string::npos ? text.size() : nl;
    line = text.substr(pos, end - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    return true;
  };
  std::string line;
  std::size_t line_start = 0;
  if (!next_line(line, line_start)) throw ParseError("empty CSV feature file", 0);
  auto header = split_commas(line);
  for (auto& h : header) h = trim(h);
  const bool has_labels = !header.empty() && header.back() == "label";
  const std::size_t d = header.size() - (has_labels ? 1 : 0);
  if (d == 0) throw ParseError("CSV header declares no feature columns", 0);

  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t rows = 0;
  while (next_line(line, line_start)) {
    if (trim(line).empty() || trim(line) == "\r") continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw ParseError("CSV row " + std::to_string(rows + 1) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(header.size()),
                       line_start);
    }
    std::size_t field_offset = line_start;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string f = trim(fields[c]);
      if (c < d) {
        char* end = nullptr;
        const double v = std::strtod(f.c_str(), &end);
        if (f.empty() || *end != '\0' || !std::isfinite(v)) {
          throw ParseError("bad numeric field '" + f + "'", field_offset);
        }
        values.push_back(v);
      } else {
        char* end = nullptr;
        const long long v = std::strtoll(f.c_str(), &end, 10);
        if (f.empty() || *end != '\0' || v < 0) throw ParseError("bad label field '" + f + "'", field_offset);
        labels.push_back(static_cast<std::size_t>(v));
      }
      field_offset += fields[c].size() + 1;
    }
    ++rows;
  }
  Dataset ds;
  ds.name = "csv";
  ds.features = Mat(rows, d, std::move(values));
  if (has_labels) ds.labels = std::move(labels);
  return ds;
}

std::vector<unsigned char> format_features_binary(const Dataset& ds) {
  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint64_t>(out, ds.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.dim()));
  put<std::uint8_t>(out, ds.labels ? 1 : 0);
  for (double v : ds.features.values()) put<float>(out, static_cast<float>(v));
  if (ds.labels) {
    for (std::size_t y : *ds.labels) put<std::uint32_t>(out, static_cast<std::uint32_t>(y));
  }
  return out;
}

Dataset parse_features_binary(std::span<const unsigned char> bytes) {
  ByteReader r(bytes);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>("magic"));
  if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError("bad magic, expected SECF", 0);
  const std::size_t version_at = r.pos();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kFormatVersion) {
    throw ParseError("unsupported feature file version " + std::to_string(version), version_at);
  }
  const auto n = r.get<std::uint64_t>("row count");
  const auto d = r.get<std::uint32_t>("dimension");
  const std::size_t flag_at = r.pos();
  const auto has_labels = r.get<std::uint8_t>("label flag");
  if (has_labels > 1) throw ParseError("label flag must be 0 or 1", flag_at);
  const std::uint64_t need = n * d * sizeof(float) + (has_labels ? n * sizeof(std::uint32_t) : 0);
  if (d == 0 && n > 0) throw ParseError("zero feature dimension", flag_at - sizeof(std::uint32_t));
  if (r.remaining() < need) {
    throw ParseError("truncated feature file: need " + std::to_string(need) + " payload bytes, have " +
                         std::to_string(r.remaining()),
                     bytes.size());
  }
  Dataset ds;
  ds.name = "binary";
  ds.features = Mat(n, d);
  for (double& v : ds.features.values()) v = r.get<float>("features");
  if (has_labels) {
    std::vector<std::size_t> labels(n);
    for (auto& y : labels) y = r.get<std::uint32_t>("labels");
    ds.labels = std::move(labels);
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes after feature payload", r.pos());
  return ds;
}

Dataset load_features(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open feature file " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Dataset ds = format_for_path(path) == FeatureFormat::kCsv
                   ? parse_features_csv(std::string(bytes.begin(), bytes.end()))
                   : parse_features_binary(bytes);
  ds.name = path;
  ds.validate();
  return ds;
}

void save_features(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  if (format_for_path(path) == FeatureFormat::kCsv) {
    f << format_features_csv(ds);
  } else {
    const auto bytes = format_features_binary(ds);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!f) throw std::runtime_error("failed writing " + path);
}

}  // namespace secu
