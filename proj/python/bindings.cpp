#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "secu/assignment.hpp"
#include "secu/centers.hpp"
#include "secu/checkpoint.hpp"
#include "secu/discrimination.hpp"
#include "secu/metrics.hpp"
#include "secu/probes.hpp"
#include "secu/run_config.hpp"
#include "secu/toy.hpp"
#include "secu/trainer.hpp"

namespace py = pybind11;
using namespace secu;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Mat to_mat(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-d array, got " + std::to_string(a.ndim()) + "-d");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return Mat(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

Vec to_vec(const Array& a) {
  if (a.ndim() != 1) throw ShapeError("expected a 1-d array, got " + std::to_string(a.ndim()) + "-d");
  return Vec(a.data(), a.data() + a.shape(0));
}

std::vector<std::size_t> to_labels(const LabelArray& a) {
  if (a.ndim() != 1) throw ShapeError("labels must be 1-d");
  std::vector<std::size_t> out(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (a.data()[i] < 0) throw std::invalid_argument("labels must be non-negative");
    out[i] = static_cast<std::size_t>(a.data()[i]);
  }
  return out;
}

py::array_t<double> from_mat(const Mat& m) {
  const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())};
  return py::array_t<double>(shape, m.values().data());
}

py::array_t<double> from_vec(const Vec& v) {
  return py::array_t<double>(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())}, v.data());
}

py::array_t<std::int64_t> from_labels(const std::vector<std::size_t>& v) {
  const std::vector<std::int64_t> wide(v.begin(), v.end());
  return py::array_t<std::int64_t>(std::vector<py::ssize_t>{static_cast<py::ssize_t>(wide.size())}, wide.data());
}

Dataset make_dataset(const Array& features, const std::optional<LabelArray>& labels) {
  Dataset ds;
  ds.name = "python";
  ds.features = to_mat(features);
  if (labels) ds.labels = to_labels(*labels);
  ds.validate();
  return ds;
}

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["acc"] = r.acc;
  d["nmi"] = r.nmi;
  d["ari"] = r.ari;
  d["max_count"] = r.max_count;
  d["min_count"] = r.min_count;
  return d;
}

// A fitted model plus its per-epoch logs.
struct PyModel {
  Model model;
  std::vector<EpochLog> logs;
};

}  // namespace

PYBIND11_MODULE(_secu, m) {
  m.doc() = "Stable cluster discrimination";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("softmax", [](const Array& s) { return from_vec(stable_softmax(to_vec(s))); }, py::arg("scores"));

  m.def(
      "predict",
      [](const Array& x, const Array& centers, double lam) {
        return from_vec(predict(to_vec(x), to_mat(centers), Temperature(lam)).probs);
      },
      py::arg("x"), py::arg("centers"), py::arg("lam"));

  m.def(
      "secu_loss",
      [](const Array& x, std::size_t label, const Array& centers, double lam) {
        return secu_loss(to_vec(x), label, to_mat(centers), Temperature(lam));
      },
      py::arg("x"), py::arg("label"), py::arg("centers"), py::arg("lam"));

  m.def(
      "grad_w_secu",
      [](const Array& x, const LabelArray& y, const Array& centers, double lam) {
        return from_mat(grad_w_secu(to_mat(x), to_labels(y), to_mat(centers), Temperature(lam)));
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("centers"), py::arg("lam"));

  m.def(
      "grad_w_ce",
      [](const Array& x, const LabelArray& y, const Array& centers, double lam) {
        return from_mat(grad_w_ce(to_mat(x), to_labels(y), to_mat(centers), Temperature(lam)));
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("centers"), py::arg("lam"));

  m.def(
      "closed_form_centers",
      [](const Array& x, const LabelArray& y, const Array& assigned_probs, const Array& centers) {
        Mat w = to_mat(centers);
        CenterAccumulator acc(w.rows(), w.cols());
        accumulate(acc, to_mat(x), to_labels(y), to_vec(assigned_probs));
        closed_form_update(acc, w);
        return from_mat(w);
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("assigned_probs"), py::arg("centers"),
      "Hardness-weighted center update with weights 1 - p.");

  m.def(
      "uniform_mean_centers",
      [](const Array& x, const LabelArray& y, const Array& centers) {
        Mat w = to_mat(centers);
        coke_update(to_mat(x), to_labels(y), w);
        return from_mat(w);
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("centers"));

  m.def("entropy_of_counts", [](const std::vector<std::size_t>& c) { return entropy_of_counts(c); },
        py::arg("counts"));
  m.def("default_alpha", &default_alpha, py::arg("num_instances"));

  m.def(
      "accuracy", [](const LabelArray& p, const LabelArray& t) { return accuracy(to_labels(p), to_labels(t)); },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "nmi", [](const LabelArray& p, const LabelArray& t) { return nmi(to_labels(p), to_labels(t)); },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "ari", [](const LabelArray& p, const LabelArray& t) { return ari(to_labels(p), to_labels(t)); },
      py::arg("pred"), py::arg("truth"));

  m.def(
      "gaussian_mixture",
      [](std::size_t components, std::size_t per_component, std::size_t dim, double separation, double stddev,
         std::uint64_t seed) {
        SeededRng rng(seed);
        const Dataset ds = gen_gaussian_mixture({components, per_component, dim, separation, stddev}, rng);
        return py::make_tuple(from_mat(ds.features), from_labels(*ds.labels));
      },
      py::arg("components") = 10, py::arg("per_component") = 200, py::arg("dim") = 32,
      py::arg("separation") = 10.0, py::arg("stddev") = 1.0, py::arg("seed") = 0);

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("num_heads", [](const PyModel& pm) { return pm.model.heads.size(); })
      .def("centers", [](const PyModel& pm, std::size_t head) { return from_mat(pm.model.heads.at(head).centers.weights); },
           py::arg("head") = 0)
      .def("embed", [](const PyModel& pm, const Array& x) { return from_mat(pm.model.encoder.embed_rows(to_mat(x))); },
           py::arg("features"))
      .def("predict",
           [](const PyModel& pm, const Array& x, std::size_t head) {
             return from_labels(predict_labels(pm.model, head, to_mat(x)));
           },
           py::arg("features"), py::arg("head") = 0)
      .def("evaluate",
           [](const PyModel& pm, const Array& x, const LabelArray& y, std::size_t head) {
             return report_dict(evaluate(pm.model, head, make_dataset(x, y)));
           },
           py::arg("features"), py::arg("labels"), py::arg("head") = 0)
      .def("logs",
           [](const PyModel& pm) {
             py::list out;
             for (const auto& l : pm.logs) out.append(epoch_log_json(l));
             return out;
           })
      .def("save", [](const PyModel& pm, const std::string& path) { save_checkpoint(pm.model, path); },
           py::arg("path"));

  m.def(
      "load_model", [](const std::string& path) { return PyModel{load_checkpoint(path), {}}; }, py::arg("path"));

  m.def(
      "fit",
      [](const Array& features, const std::optional<LabelArray>& labels, const std::string& config) {
        // The config text uses the same INI sections as the command line; its
        // [data] section is ignored in favor of the arrays passed here.
        const RunConfig rc = parse_run_config("[data]\nsource = gaussian\n" + config);
        const Dataset data = make_dataset(features, labels);
        FitResult r = [&] {
          py::gil_scoped_release release;
          return fit(data, resolve_train_config(rc, data));
        }();
        return PyModel{std::move(r.model), std::move(r.logs)};
      },
      py::arg("features"), py::arg("labels") = py::none(), py::arg("config"),
      "Trains on the given arrays. `config` holds [train], [constraint], [augment] and [run] sections.");

  m.def(
      "coverage_probe",
      [](std::size_t k, std::size_t b, std::size_t trials, std::uint64_t seed) {
        const CoverageResult r = coverage_probe(k, b, trials, SeededRng(seed));
        py::dict d;
        d["max_covered"] = r.max_covered;
        d["mean_covered"] = r.mean_covered;
        d["mean_uncovered_fraction"] = r.mean_uncovered_fraction();
        d["expected_covered"] = expected_coverage(k, b);
        return d;
      },
      py::arg("clusters"), py::arg("batch"), py::arg("trials") = 1000, py::arg("seed") = 0);

  m.def("predicted_variance_ratio", &predicted_variance_ratio, py::arg("clusters"), py::arg("mean_norm"));

  m.def(
      "variance_probe",
      [](std::size_t k, std::size_t dim, double a, std::size_t samples, std::uint64_t seed) {
        const SeededRng rng(seed);
        SeededRng model_rng = rng.split(0), sample_rng = rng.split(1);
        const auto model = SphereClusterModel::random(k, dim, a, model_rng);
        const VarianceProbeResult r = variance_ratio_probe(model, samples, sample_rng);
        py::dict d;
        d["var_pos"] = r.var_pos;
        d["var_neg"] = r.var_neg;
        d["predicted_ratio"] = r.predicted_ratio;
        d["empirical_ratio"] = r.empirical_ratio;
        return d;
      },
      py::arg("clusters") = 50, py::arg("dim") = 128, py::arg("mean_norm") = 0.9, py::arg("samples") = 100000,
      py::arg("seed") = 0);

  m.def(
      "toy",
      [](std::uint64_t first_seed, std::uint64_t max_tries) -> py::object {
        const auto found = find_toy_seed(first_seed, max_tries);
        if (!found) return py::none();
        py::dict d;
        d["seed"] = found->seed;
        d["points"] = from_mat(found->data.features);
        d["labels"] = from_labels(*found->data.labels);
        d["uniform_centers"] = from_mat(found->uniform_centers);
        d["secu_centers"] = from_mat(found->weighted_centers);
        d["uniform_acc"] = found->uniform_acc;
        d["secu_acc"] = found->weighted_acc;
        std::ostringstream csv;
        write_toy_csv(csv, *found);
        d["csv"] = csv.str();
        return d;
      },
      py::arg("first_seed") = 0, py::arg("max_tries") = 1000);
}
