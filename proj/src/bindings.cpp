#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "csfiqa/gradcheck_suite.hpp"
#include "csfiqa/metrics.hpp"
#include "csfiqa/train.hpp"

namespace py = pybind11;
using namespace csfiqa;

namespace {

Tensor vec_tensor(const std::vector<double>& v) {
  return Tensor::vector(v);
}

std::vector<double> py_softmax(const std::vector<double>& logits) {
  return softmax(vec_tensor(logits)).data();
}

std::vector<double> py_masked_softmax(const std::vector<double>& logits,
                                      const std::vector<bool>& keep) {
  std::vector<std::uint8_t> mask(keep.begin(), keep.end());
  return masked_softmax(vec_tensor(logits), mask).data();
}

double py_cosine_sim(const std::vector<double>& u, const std::vector<double>& v) {
  return cosine_sim(vec_tensor(u), vec_tensor(v)).item();
}

double py_info_nce(const std::vector<double>& anchor,
                   const std::vector<std::vector<double>>& positives,
                   const std::vector<std::vector<double>>& negatives, double tau) {
  std::vector<Tensor> pos, neg;
  for (const auto& p : positives) pos.push_back(vec_tensor(p));
  for (const auto& n : negatives) neg.push_back(vec_tensor(n));
  return info_nce(vec_tensor(anchor), pos, neg, tau).item();
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> py_classify_pairs(
    const std::vector<double>& labels, std::size_t anchor, double beta_pair) {
  PairSets s = classify_pairs(labels, anchor, beta_pair);
  return {s.positives, s.negatives};
}

double py_noise_loss(const std::vector<std::vector<double>>& small_regions,
                     const std::vector<std::vector<double>>& large_regions,
                     const std::string& mode, const std::string& form) {
  SclConfig cfg;
  if (mode == "all_pairs")
    cfg.noise_mode = NoiseMode::kAllPairs;
  else if (mode == "least_similar")
    cfg.noise_mode = NoiseMode::kLeastSimilar;
  else
    throw ConfigError("unknown noise mode " + mode);
  if (form == "exp_inverse")
    cfg.noise_form = NoiseForm::kExpInverse;
  else if (form == "reciprocal")
    cfg.noise_form = NoiseForm::kReciprocal;
  else
    throw ConfigError("unknown noise form " + form);
  std::vector<Tensor> sm, lg;
  for (const auto& r : small_regions) sm.push_back(vec_tensor(r));
  for (const auto& r : large_regions) lg.push_back(vec_tensor(r));
  return noise_loss(sm, lg, cfg).item();
}

std::vector<std::pair<std::string, double>> py_synth_data(std::size_t n,
                                                          std::uint64_t seed,
                                                          const std::string& out_dir) {
  DatasetManifest m = synth_generate(n, seed, out_dir);
  std::vector<std::pair<std::string, double>> rows;
  for (const auto& r : m.rows) rows.emplace_back(r.path, r.mos);
  return rows;
}

bool py_gradcheck() {
  std::ostringstream os;
  return run_gradcheck_suite(RunConfig{}, os);
}

// Thin inference wrapper around a saved checkpoint.
class Predictor {
 public:
  explicit Predictor(const std::string& checkpoint_path) {
    std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<double>>> arrays;
    const std::string cfg_text = load_checkpoint(checkpoint_path, arrays);
    cfg_ = parse_config(cfg_text);
    model_ = std::make_unique<Model>(Model::create(cfg_, cfg_.train.seed));
    restore_params(model_->store, checkpoint_path);
  }

  double predict(const std::string& image_path) const {
    LoadedSample s = prepare_sample(read_pnm(image_path), cfg_.model);
    return model_->forward(s.small, s.large).y_hat.item();
  }

  std::pair<double, double> evaluate_manifest(const std::string& manifest_path) const {
    std::vector<LoadedSample> data = load_dataset(manifest_path, cfg_.model);
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return evaluate(*model_, data, idx);
  }

 private:
  RunConfig cfg_;
  std::unique_ptr<Model> model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "CSFIQA core operations";

  py::register_exception<ShapeError>(m, "ShapeError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericError>(m, "NumericError");
  py::register_exception<InvalidMaskError>(m, "InvalidMaskError");

  m.def("softmax", &py_softmax, py::arg("logits"));
  m.def("masked_softmax", &py_masked_softmax, py::arg("logits"), py::arg("keep"));
  m.def("cosine_sim", &py_cosine_sim, py::arg("u"), py::arg("v"));
  m.def("info_nce", &py_info_nce, py::arg("anchor"), py::arg("positives"),
        py::arg("negatives"), py::arg("tau") = 0.1);
  m.def("classify_pairs", &py_classify_pairs, py::arg("labels"), py::arg("anchor"),
        py::arg("beta_pair"));
  m.def("noise_loss", &py_noise_loss, py::arg("small_regions"), py::arg("large_regions"),
        py::arg("mode") = "all_pairs", py::arg("form") = "exp_inverse");
  m.def("srcc", &srcc, py::arg("pred"), py::arg("target"));
  m.def("plcc", &plcc, py::arg("pred"), py::arg("target"));
  m.def("median", &median, py::arg("values"));
  m.def("synth_data", &py_synth_data, py::arg("n"), py::arg("seed"), py::arg("out_dir"));
  m.def("gradcheck", &py_gradcheck);

  py::class_<Predictor>(m, "Predictor")
      .def(py::init<const std::string&>(), py::arg("checkpoint_path"))
      .def("predict", &Predictor::predict, py::arg("image_path"))
      .def("evaluate_manifest", &Predictor::evaluate_manifest, py::arg("manifest_path"));
}
