#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace secu {

// Global threshold below which a vector is treated as degenerate.
inline constexpr double kNormEpsilon = 1e-12;

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Mat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  void fill(double v);

  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// All reductions below sum strictly left to right over the reduction axis so
// results are bit-reproducible for identical inputs.

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

// y = A x
Vec matvec(const Mat& a, std::span<const double> x);
// y = A^T x
Vec matvec_transposed(const Mat& a, std::span<const double> x);
// C = A B
Mat matmul(const Mat& a, const Mat& b);
// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// Unit-norm copy of v. Throws NumericError when ||v|| <= kNormEpsilon.
Vec normalize(std::span<const double> v);
// Normalizes every row of m in place.
void normalize_rows(Mat& m);

// Max-subtracted softmax. Throws NumericError on non-finite input.
Vec stable_softmax(std::span<const double> scores);
// log(softmax(scores)) computed without forming the probabilities.
Vec log_softmax(std::span<const double> scores);

bool all_finite(std::span<const double> v);

// Deterministic generator: xoshiro256** seeded through splitmix64. Uniform
// doubles take the top 53 bits; normals use the Box-Muller transform. No
// std:: distributions are involved, so streams do not depend on the standard
// library implementation.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be > 0.
  std::size_t below(std::size_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);
  // Unit vector drawn uniformly on the sphere S^{d-1}.
  Vec unit_vector(std::size_t d);

  // Independent child stream: seed derived as splitmix64(seed ^ (index * golden)).
  SeededRng split(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace secu
