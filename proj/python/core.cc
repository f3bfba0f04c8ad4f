#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "canseg/cli.h"
#include "canseg/config.h"
#include "canseg/data.h"
#include "canseg/errors.h"
#include "canseg/eval.h"
#include "canseg/levenshtein.h"
#include "canseg/model.h"
#include "canseg/model_io.h"
#include "canseg/synthetic.h"

namespace py = pybind11;

namespace {

using Example = std::tuple<std::u32string, canseg::Morphemes>;

py::object to_python(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

nlohmann::json from_python(const py::object& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

canseg::Corpus make_corpus(const std::vector<Example>& examples, const std::string& name) {
  canseg::Corpus corpus;
  corpus.name = name;
  for (const auto& [surface, morphemes] : examples) {
    canseg::SegmentationExample ex{surface, morphemes};
    canseg::validate_example(ex);
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

std::vector<Example> examples_of(const canseg::Corpus& corpus) {
  std::vector<Example> out;
  for (const auto& ex : corpus.examples) out.emplace_back(ex.surface, ex.morphemes);
  return out;
}

canseg::TrainConfig config_from(const std::string& model, const std::string& regime,
                                const std::optional<py::dict>& overrides) {
  nlohmann::json doc = overrides ? from_python(*overrides) : nlohmann::json::object();
  doc["model"] = model;
  doc["regime"] = regime;
  return canseg::TrainConfig::from_json(doc);
}

class PyModel {
 public:
  explicit PyModel(std::unique_ptr<canseg::Model> model) : model_(std::move(model)) {}

  static PyModel load(const std::string& path) { return PyModel(canseg::load_model(path)); }

  static std::tuple<PyModel, py::object> train(const std::vector<Example>& train,
                                               const std::vector<Example>& dev,
                                               const std::string& model, const std::string& regime,
                                               const std::optional<py::dict>& config) {
    const auto cfg = config_from(model, regime, config);
    const auto train_corpus = make_corpus(train, "train");
    const auto dev_corpus = make_corpus(dev, "dev");
    auto m = canseg::create_model(cfg, canseg::build_vocabulary(train_corpus));
    canseg::TrainingLog log;
    {
      py::gil_scoped_release release;
      log = canseg::train_model(*m, train_corpus, dev_corpus);
    }
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : log.epochs) epochs.push_back(e.to_json());
    return {PyModel(std::move(m)), to_python(epochs)};
  }

  canseg::Morphemes predict(const std::u32string& word, std::optional<int> beam) const {
    const int width = beam.value_or(model_->config().beam_width);
    if (width < 1) throw py::value_error("beam must be at least 1");
    return model_->predict(word, width);
  }

  void save(const std::string& path) const { canseg::save_model(path, *model_); }
  std::string kind() const { return canseg::to_string(model_->kind()); }
  py::object config() const { return to_python(model_->config().to_json()); }
  std::u32string characters() const { return model_->vocab().characters(); }

 private:
  std::unique_ptr<canseg::Model> model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Canonical morphological segmentation";
  m.attr("__version__") = canseg::version();

  py::register_exception<canseg::Error>(m, "CansegError", PyExc_ValueError);

  m.def("load_corpus", [](const std::string& path) { return examples_of(canseg::load_corpus(path)); },
        py::arg("path"), "Reads a corpus TSV into (surface, morphemes) pairs.");
  m.def(
      "corpus_stats",
      [](const std::vector<Example>& examples) {
        return to_python(canseg::to_json(canseg::corpus_stats(make_corpus(examples, "corpus"))));
      },
      py::arg("examples"));
  m.def(
      "generate_synthetic",
      [](size_t n, uint64_t seed, const std::optional<py::dict>& spec) {
        const auto s = spec ? canseg::SyntheticLanguageSpec::from_json(from_python(*spec))
                            : canseg::SyntheticLanguageSpec{};
        return examples_of(canseg::generate_synthetic(s, n, seed));
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("spec") = py::none());
  m.def(
      "default_config",
      [](const std::string& model, const std::string& regime) {
        return to_python(canseg::TrainConfig::defaults(canseg::parse_model_kind(model),
                                                       canseg::parse_regime(regime))
                             .to_json());
      },
      py::arg("model"), py::arg("regime") = "high");

  m.def(
      "evaluate",
      [](const std::vector<canseg::Morphemes>& gold, const std::vector<canseg::Morphemes>& pred) {
        return to_python(canseg::evaluate(gold, pred).to_json());
      },
      py::arg("gold"), py::arg("pred"));
  m.def(
      "mcnemar",
      [](const std::vector<bool>& a, const std::vector<bool>& b) {
        return to_python(canseg::mcnemar(a, b).to_json());
      },
      py::arg("correct_a"), py::arg("correct_b"));
  m.def(
      "classify_error",
      [](const std::u32string& surface, const canseg::Morphemes& gold,
         const canseg::Morphemes& pred) {
        const auto f = canseg::classify_error(surface, gold, pred);
        py::dict d;
        d["overseg"] = f.overseg;
        d["underseg"] = f.underseg;
        d["restoration"] = f.restoration;
        d["overrestoration"] = f.overrestoration;
        d["wrong_seg"] = f.wrong_seg;
        return d;
      },
      py::arg("surface"), py::arg("gold"), py::arg("pred"));
  m.def(
      "error_profile",
      [](const std::vector<std::u32string>& surfaces, const std::vector<canseg::Morphemes>& gold,
         const std::vector<canseg::Morphemes>& pred) {
        return to_python(canseg::error_profile(surfaces, gold, pred).to_json());
      },
      py::arg("surfaces"), py::arg("gold"), py::arg("pred"));
  m.def(
      "levenshtein",
      [](const std::u32string& a, const std::u32string& b) { return canseg::levenshtein(a, b); },
      py::arg("a"), py::arg("b"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return canseg::run_cli(args, std::cout, std::cerr);
      },
      py::arg("args"), "Runs a canseg command line and returns its exit code.");

  py::class_<PyModel>(m, "Model")
      .def_static("load", &PyModel::load, py::arg("path"))
      .def_static("train", &PyModel::train, py::arg("train"), py::arg("dev"), py::arg("model"),
                  py::arg("regime") = "high", py::arg("config") = py::none(),
                  "Trains a model; returns (model, per-epoch log).")
      .def("predict", &PyModel::predict, py::arg("word"), py::arg("beam") = py::none())
      .def("save", &PyModel::save, py::arg("path"))
      .def_property_readonly("kind", &PyModel::kind)
      .def_property_readonly("config", &PyModel::config)
      .def_property_readonly("characters", &PyModel::characters);
}
