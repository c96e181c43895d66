#include "secu/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace secu {

namespace {

constexpr char kMagic[4] = {'S', 'E', 'C', 'U'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little);

class Writer {
 public:
  template <typename T>
  void put(T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out_.insert(out_.end(), b, b + sizeof(T));
  }
  void put_all(std::span<const double> v) {
    for (double x : v) put(x);
  }
  std::vector<unsigned char> take() { return std::move(out_); }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> b) : b_(b) {}
  template <typename T>
  T get(const char* what) {
    if (b_.size() - pos_ < sizeof(T)) {
      throw ParseError(std::string("truncated checkpoint while reading ") + what, pos_);
    }
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_all(std::span<double> v, const char* what) {
    for (double& x : v) x = get<double>(what);
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::span<const unsigned char> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> serialize_checkpoint(const Model& model) {
  Writer w;
  for (char c : kMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kVersion);
  const auto& layers = model.encoder.layers();
  w.put(static_cast<std::uint32_t>(layers.size()));
  for (std::size_t d : model.encoder.layer_dims()) w.put(static_cast<std::uint32_t>(d));
  for (const auto& layer : layers) {
    w.put_all(layer.weight.values());
    w.put_all(layer.bias);
  }
  for (const auto& layer : layers) {
    w.put_all(layer.weight_momentum.values());
    w.put_all(layer.bias_momentum);
  }
  w.put(static_cast<std::uint32_t>(model.heads.size()));
  for (const auto& head : model.heads) {
    w.put(static_cast<std::uint32_t>(head.centers.num_clusters()));
    w.put(static_cast<std::uint32_t>(head.centers.dim()));
    w.put_all(head.centers.weights.values());
  }
  return w.take();
}

Model deserialize_checkpoint(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.get<std::uint8_t>("magic") != static_cast<std::uint8_t>(c)) {
      throw ParseError("bad checkpoint magic, expected SECU", 0);
    }
  }
  const std::size_t version_at = r.pos();
  if (const auto v = r.get<std::uint32_t>("version"); v != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(v), version_at);
  }
  const auto layer_count = r.get<std::uint32_t>("layer count");
  if (layer_count == 0 || layer_count > 1024) throw ParseError("implausible layer count", r.pos() - 4);
  std::vector<std::size_t> dims(layer_count + 1);
  for (auto& d : dims) {
    d = r.get<std::uint32_t>("layer dims");
    if (d == 0) throw ParseError("zero layer width", r.pos() - 4);
  }
  std::vector<DenseLayer> layers(layer_count);
  for (std::size_t l = 0; l < layer_count; ++l) {
    layers[l].weight = Mat(dims[l + 1], dims[l]);
    layers[l].bias = Vec(dims[l + 1]);
    r.get_all(layers[l].weight.values(), "weights");
    r.get_all(layers[l].bias, "biases");
  }
  for (std::size_t l = 0; l < layer_count; ++l) {
    layers[l].weight_momentum = Mat(dims[l + 1], dims[l]);
    layers[l].bias_momentum = Vec(dims[l + 1]);
    r.get_all(layers[l].weight_momentum.values(), "weight momentum");
    r.get_all(layers[l].bias_momentum, "bias momentum");
  }
  Model model{EncoderMLP(std::move(layers)), {}};
  const auto head_count = r.get<std::uint32_t>("head count");
  for (std::uint32_t h = 0; h < head_count; ++h) {
    const auto k = r.get<std::uint32_t>("head K");
    const std::size_t d_at = r.pos();
    const auto d = r.get<std::uint32_t>("head dim");
    if (k == 0) throw ParseError("head with zero clusters", d_at - 4);
    if (d != dims.back()) throw ParseError("head dim differs from embedding dim", d_at);
    Mat w(k, d);
    r.get_all(w.values(), "centers");
    ClusterHead head;
    head.centers = ClusterCenters(w);
    head.centers.weights = std::move(w);  // stored rows are already unit-norm
    head.previous = head.centers.weights;
    head.state = AssignmentState(0, k);
    model.heads.push_back(std::move(head));
  }
  if (!r.done()) throw ParseError("trailing bytes after checkpoint", r.pos());
  return model;
}

void save_checkpoint(const Model& model, const std::string& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace secu
