#include "secu/toy.hpp"

#include <cstdio>
#include <ostream>

#include "secu/centers.hpp"
#include "secu/discrimination.hpp"
#include "secu/metrics.hpp"

namespace secu {

namespace {

std::vector<std::size_t> nearest(const Mat& embeddings, const Mat& centers) {
  std::vector<std::size_t> out(embeddings.rows());
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    const Vec s = matvec(centers, embeddings.row(i));
    std::size_t best = 0;
    for (std::size_t j = 1; j < s.size(); ++j) {
      if (s[j] > s[best]) best = j;
    }
    out[i] = best;
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ToyOutcome run_toy(std::uint64_t seed, const ToyConfig& cfg) {
  SeededRng rng(seed);
  ToyOutcome out;
  out.seed = seed;
  SeededRng data_rng = rng.split(0);
  out.data = gen_gaussian_mixture({2, cfg.per_component, 2, cfg.separation, 1.0}, data_rng);
  out.data.name = "toy";
  out.embeddings = out.data.features;
  for (std::size_t i = 0; i < out.embeddings.rows(); ++i) {
    if (!(norm2(out.embeddings.row(i)) > kNormEpsilon)) out.embeddings(i, 0) = 1.0;
  }
  normalize_rows(out.embeddings);

  SeededRng init_rng = rng.split(1);
  const Mat init = seed_centers(out.embeddings, 2, init_rng);
  const Temperature lambda(cfg.lambda);

  out.uniform_centers = init;
  out.weighted_centers = init;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto yu = nearest(out.embeddings, out.uniform_centers);
    CenterAccumulator acc_u(2, 2);
    accumulate(acc_u, out.embeddings, yu, Vec(yu.size(), 0.0));
    closed_form_update(acc_u, out.uniform_centers);

    const auto yw = nearest(out.embeddings, out.weighted_centers);
    Vec p(yw.size());
    for (std::size_t i = 0; i < yw.size(); ++i) {
      p[i] = predict(out.embeddings.row(i), out.weighted_centers, lambda).probs[yw[i]];
    }
    CenterAccumulator acc_w(2, 2);
    accumulate(acc_w, out.embeddings, yw, p);
    closed_form_update(acc_w, out.weighted_centers);
  }
  out.uniform_labels = nearest(out.embeddings, out.uniform_centers);
  out.weighted_labels = nearest(out.embeddings, out.weighted_centers);
  out.uniform_acc = accuracy(out.uniform_labels, *out.data.labels);
  out.weighted_acc = accuracy(out.weighted_labels, *out.data.labels);
  return out;
}

std::optional<ToyOutcome> find_toy_seed(std::uint64_t first_seed, std::uint64_t max_tries,
                                        const ToyConfig& cfg) {
  for (std::uint64_t s = first_seed; s < first_seed + max_tries; ++s) {
    ToyOutcome o = run_toy(s, cfg);
    if (o.separates()) return o;
  }
  return std::nullopt;
}

void write_toy_csv(std::ostream& out, const ToyOutcome& o) {
  out << "kind,index,x,y,label,method\n";
  for (std::size_t i = 0; i < o.data.size(); ++i) {
    out << "point," << i << ',' << fmt(o.data.features(i, 0)) << ',' << fmt(o.data.features(i, 1)) << ','
        << (*o.data.labels)[i] << ",truth\n";
  }
  auto centers = [&](const Mat& w, const char* method) {
    for (std::size_t j = 0; j < w.rows(); ++j) {
      out << "center," << j << ',' << fmt(w(j, 0)) << ',' << fmt(w(j, 1)) << ',' << j << ',' << method << '\n';
    }
  };
  centers(o.uniform_centers, "uniform");
  centers(o.weighted_centers, "secu");
  out << "acc,0," << fmt(o.uniform_acc) << ",,,uniform\n";
  out << "acc,0," << fmt(o.weighted_acc) << ",,,secu\n";
}

}  // namespace secu
