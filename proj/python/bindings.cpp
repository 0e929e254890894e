#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>

#include "uap/error.hpp"
#include "uap/uap.hpp"

namespace py = pybind11;
using namespace uap;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<float>(a.data(), a.data() + a.size()));
}

std::vector<float> to_vector(const FloatArray& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<float> to_array(const Tensor& t) {
  py::array_t<float> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

NormOrder norm_order(const py::object& p) {
  if (py::isinstance<py::str>(p)) return parse_norm_order(p.cast<std::string>());
  const double v = p.cast<double>();
  if (v == 2.0) return NormOrder::L2;
  if (std::isinf(v) && v > 0) return NormOrder::Linf;
  throw std::invalid_argument("norm order must be 2 or inf");
}

py::object norm_order_to_py(NormOrder p) {
  return p == NormOrder::L2 ? py::object(py::int_(2)) : py::object(py::float_(INFINITY));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Universal adversarial perturbation core";
  m.attr("__version__") = UAP_VERSION;

  static py::exception<FormatError> format_error(m, "FormatError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const FormatError& e) {
      py::set_error(format_error, e.what());
    }
  });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const FloatArray& images, std::vector<std::uint32_t> labels,
                       std::vector<std::string> class_names) {
             return Dataset(to_tensor(images), std::move(labels), std::move(class_names));
           }),
           py::arg("images"), py::arg("labels"), py::arg("class_names"))
      .def_property_readonly("images", [](const Dataset& d) { return to_array(d.images()); })
      .def_property_readonly("labels", &Dataset::labels)
      .def_property_readonly("class_names", &Dataset::class_names)
      .def_property_readonly("dim", &Dataset::dim)
      .def_property_readonly("num_classes", &Dataset::num_classes)
      .def("subset", [](const Dataset& d, std::vector<std::size_t> idx) { return d.subset(idx); })
      .def("__len__", &Dataset::size)
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  py::class_<Model>(m, "Model")
      .def_property_readonly("input_dim", &Model::input_dim)
      .def_property_readonly("num_classes", &Model::num_classes)
      .def("__eq__", [](const Model& a, const Model& b) { return a == b; });

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("train_accuracy", &TrainResult::train_accuracy)
      .def_readonly("final_loss", &TrainResult::final_loss);

  py::class_<DeepFoolResult>(m, "DeepFoolResult")
      .def_property_readonly("r", [](const DeepFoolResult& r) { return to_array(r.r); })
      .def_readonly("iterations", &DeepFoolResult::iterations)
      .def_readonly("success", &DeepFoolResult::success)
      .def_readonly("degenerate", &DeepFoolResult::degenerate)
      .def_readonly("original_label", &DeepFoolResult::original_label)
      .def_readonly("new_label", &DeepFoolResult::new_label)
      .def_readonly("norm_history", &DeepFoolResult::norm_history);

  py::class_<Perturbation>(m, "Perturbation")
      .def_property_readonly("v", [](const Perturbation& p) { return to_array(p.v); })
      .def_property_readonly("p", [](const Perturbation& p) { return norm_order_to_py(p.p); })
      .def_readonly("xi", &Perturbation::xi)
      .def_readonly("passes_used", &Perturbation::passes_used)
      .def_readonly("achieved_fooling_rate", &Perturbation::achieved_fooling_rate)
      .def_readonly("source", &Perturbation::source)
      .def("__eq__", [](const Perturbation& a, const Perturbation& b) { return a == b; });

  py::class_<UapResult>(m, "UapResult")
      .def_readonly("perturbation", &UapResult::perturbation)
      .def_property_readonly("v", [](const UapResult& r) { return to_array(r.perturbation.v); })
      .def_readonly("pass_rates", &UapResult::pass_rates)
      .def_readonly("stalled", &UapResult::stalled)
      .def_readonly("updates", &UapResult::updates)
      .def_readonly("deepfool_failures", &UapResult::deepfool_failures);

  py::class_<FoolingReport>(m, "FoolingReport")
      .def_readonly("total", &FoolingReport::total)
      .def_readonly("fooled", &FoolingReport::fooled)
      .def_readonly("rate", &FoolingReport::rate)
      .def_readonly("clamp_applied", &FoolingReport::clamp_applied)
      .def_property_readonly("transitions", [](const FoolingReport& r) {
        std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> out;
        for (const auto& t : r.transitions) out.emplace_back(t.original, t.perturbed, t.count);
        return out;
      });

  py::class_<LabelGraph>(m, "LabelGraph")
      .def_property_readonly("num_labels", &LabelGraph::num_labels)
      .def_property_readonly("class_names", &LabelGraph::class_names)
      .def_property_readonly("edges", &LabelGraph::edges)
      .def("indegree", &LabelGraph::indegree)
      .def("outdegree", &LabelGraph::outdegree)
      .def("total_weight", &LabelGraph::total_weight)
      .def("to_dot", &format_dot)
      .def("to_csv", &format_edges_csv);

  m.def(
      "generate_blobs",
      [](std::size_t num_classes, std::size_t per_class, std::size_t dim, double margin,
         double sigma, std::uint64_t seed) {
        return generate_blobs({num_classes, per_class, dim, margin, sigma, seed});
      },
      py::arg("num_classes") = 10, py::arg("per_class") = 100, py::arg("dim") = 32,
      py::arg("margin") = 3.0, py::arg("sigma") = 1.0, py::arg("seed") = 0);
  m.def("sample_attack_indices", &sample_attack_indices, py::arg("dataset"),
        py::arg("per_class"), py::arg("seed"));
  m.def(
      "complement_indices",
      [](std::size_t n, std::vector<std::size_t> idx) { return complement_indices(n, idx); },
      py::arg("n"), py::arg("indices"));
  m.def("median_norm", &median_norm, py::arg("dataset"));

  m.def(
      "train",
      [](const Dataset& data, std::size_t epochs, std::size_t batch_size, double learning_rate,
         std::uint64_t seed, std::vector<std::size_t> hidden, double weight_init_scale) {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.learning_rate = learning_rate;
        cfg.seed = seed;
        cfg.hidden = std::move(hidden);
        cfg.weight_init_scale = weight_init_scale;
        py::gil_scoped_release release;
        return train(data, cfg);
      },
      py::arg("dataset"), py::arg("epochs") = 30, py::arg("batch_size") = 32,
      py::arg("learning_rate") = 0.05, py::arg("seed") = 0,
      py::arg("hidden") = std::vector<std::size_t>{64}, py::arg("weight_init_scale") = 2.45);

  m.def(
      "forward", [](const Model& model, const FloatArray& x) {
        return to_array(forward(model, to_vector(x)));
      },
      py::arg("model"), py::arg("x"));
  m.def(
      "predict", [](const Model& model, const FloatArray& x) { return predict(model, to_vector(x)); },
      py::arg("model"), py::arg("x"));
  m.def(
      "input_gradient",
      [](const Model& model, const FloatArray& x, std::size_t k) {
        return to_array(input_gradient(model, to_vector(x), k));
      },
      py::arg("model"), py::arg("x"), py::arg("k"));

  m.def(
      "deepfool",
      [](const FloatArray& x, const Model& model, double overshoot, std::size_t max_iterations,
         std::size_t candidates) {
        return deepfool(to_vector(x), model, {overshoot, max_iterations, candidates});
      },
      py::arg("x"), py::arg("model"), py::arg("overshoot") = 0.02,
      py::arg("max_iterations") = 50, py::arg("candidates") = 0);

  m.def(
      "project_lp_ball",
      [](const FloatArray& v, const py::object& p, double xi) {
        return to_array(project_lp_ball(Tensor({static_cast<std::size_t>(v.size())}, to_vector(v)),
                                        norm_order(p), xi));
      },
      py::arg("v"), py::arg("p"), py::arg("xi"));

  m.def(
      "compute_uap",
      [](const Dataset& X, const Model& model, double xi, const py::object& p,
         double target_rate, std::size_t max_passes, double overshoot,
         std::size_t max_iterations, bool shuffle, std::uint64_t seed,
         std::optional<FloatArray> v0) {
        AttackConfig cfg;
        cfg.p = norm_order(p);
        cfg.xi = xi;
        cfg.target_fooling_rate = target_rate;
        cfg.max_passes = max_passes;
        cfg.deepfool.overshoot = overshoot;
        cfg.deepfool.max_iterations = max_iterations;
        cfg.shuffle_each_pass = shuffle;
        cfg.shuffle_seed = seed;
        std::optional<Tensor> start;
        if (v0) start = Tensor({static_cast<std::size_t>(v0->size())}, to_vector(*v0));
        py::gil_scoped_release release;
        return compute_uap(X, model, cfg, std::move(start));
      },
      py::arg("X"), py::arg("model"), py::arg("xi"), py::arg("p") = 2,
      py::arg("target_rate") = 0.8, py::arg("max_passes") = 10, py::arg("overshoot") = 0.02,
      py::arg("max_iterations") = 50, py::arg("shuffle") = true, py::arg("seed") = 0,
      py::arg("v0") = py::none());

  m.def(
      "fooling_rate",
      [](const Dataset& X, const FloatArray& v, const Model& model, bool clamp) {
        return fooling_rate(X, to_vector(v), model, clamp);
      },
      py::arg("X"), py::arg("v"), py::arg("model"), py::arg("clamp") = false);
  m.def(
      "random_perturbation",
      [](std::size_t dim, const py::object& p, double xi, std::uint64_t seed) {
        Rng rng(seed);
        return to_array(random_perturbation(dim, norm_order(p), xi, rng));
      },
      py::arg("dim"), py::arg("p"), py::arg("xi"), py::arg("seed") = 0);
  m.def(
      "scale_to_norm",
      [](const FloatArray& v, const py::object& p, double target) {
        return to_array(scale_to_norm(Tensor({static_cast<std::size_t>(v.size())}, to_vector(v)),
                                      norm_order(p), target));
      },
      py::arg("v"), py::arg("p"), py::arg("target_norm"));
  m.def(
      "norm_sweep",
      [](const Dataset& X, const FloatArray& v, const Model& model, std::vector<double> norms,
         const py::object& p, bool clamp) {
        const Tensor t({static_cast<std::size_t>(v.size())}, to_vector(v));
        return norm_sweep(X, t, model, norms, norm_order(p), clamp, "v").rates;
      },
      py::arg("X"), py::arg("v"), py::arg("model"), py::arg("norms"), py::arg("p") = 2,
      py::arg("clamp") = false);

  m.def(
      "build_label_graph",
      [](const Dataset& X, const FloatArray& v, const Model& model, bool clamp) {
        return build_label_graph(X, to_vector(v), model, clamp);
      },
      py::arg("X"), py::arg("v"), py::arg("model"), py::arg("clamp") = false);
  m.def("dominant_labels", &dominant_labels, py::arg("graph"), py::arg("top_k") = 5);

  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def("save_perturbation", &save_perturbation, py::arg("perturbation"), py::arg("path"));
  m.def("load_perturbation", &load_perturbation, py::arg("path"));
}
