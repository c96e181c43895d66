#include "secu/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace secu {

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ShapeError("Mat: value count " + std::to_string(values_.size()) +
                     " does not match " + std::to_string(rows_) + "x" +
                     std::to_string(cols_));
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Mat::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vec matvec(const Mat& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw ShapeError("matvec: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times vector of length " + std::to_string(x.size()));
  }
  Vec y(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
  return y;
}

Vec matvec_transposed(const Mat& a, std::span<const double> x) {
  if (a.rows() != x.size()) {
    throw ShapeError("matvec_transposed: " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " transposed times vector of length " +
                     std::to_string(x.size()));
  }
  Vec y(a.cols(), 0.0);
  // Row-outer order: y[c] accumulates rows 0..R-1 in order.
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += row[c] * x[r];
  }
  return y;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()) + " differ");
  }
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("axpy: length mismatch " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vec normalize(std::span<const double> v) {
  const double n = norm2(v);
  if (!(n > kNormEpsilon)) {
    throw NumericError("normalize: degenerate vector (norm " + std::to_string(n) + ")");
  }
  Vec out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

void normalize_rows(Mat& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Vec u = normalize(m.row(r));
    std::copy(u.begin(), u.end(), m.row(r).begin());
  }
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vec stable_softmax(std::span<const double> scores) {
  if (scores.empty()) throw ShapeError("stable_softmax: empty score vector");
  if (!all_finite(scores)) throw NumericError("stable_softmax: non-finite score");
  const double mx = *std::max_element(scores.begin(), scores.end());
  Vec out(scores.size());
  double z = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out[j] = std::exp(scores[j] - mx);
    z += out[j];
  }
  for (double& p : out) p /= z;
  return out;
}

Vec log_softmax(std::span<const double> scores) {
  if (scores.empty()) throw ShapeError("log_softmax: empty score vector");
  if (!all_finite(scores)) throw NumericError("log_softmax: non-finite score");
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);
  const double lz = mx + std::log(z);
  Vec out(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) out[j] = scores[j] - lz;
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SeededRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t SeededRng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("SeededRng::below: n must be positive");
  // Lemire's rejection keeps the draw unbiased.
  const std::uint64_t bound = n;
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    const unsigned __int128 m = static_cast<unsigned __int128>(r) * bound;
    if (static_cast<std::uint64_t>(m) >= threshold) {
      return static_cast<std::size_t>(m >> 64);
    }
  }
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::vector<std::size_t> SeededRng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[below(i)]);
  return p;
}

Vec SeededRng::unit_vector(std::size_t d) {
  for (;;) {
    Vec v(d);
    for (double& x : v) x = normal();
    if (norm2(v) > 1e-6) return normalize(v);
  }
}

SeededRng SeededRng::split(std::uint64_t index) const {
  std::uint64_t x = seed_ ^ (index * 0x9E3779B97F4A7C15ULL);
  return SeededRng(splitmix64(x));
}

}  // namespace secu
