#include "canseg/model_io.h"

#include "canseg/errors.h"

namespace canseg {

namespace {

constexpr const char* kFormatTag = "canseg-model";

}  // namespace

nlohmann::json model_header(const Model& model) {
  std::vector<uint32_t> chars;
  for (char32_t c : model.vocab().characters()) chars.push_back(static_cast<uint32_t>(c));
  return {{"format", kFormatTag},
          {"kind", to_string(model.kind())},
          {"config", model.config().to_json()},
          {"vocabulary", chars},
          {"extra", model.extra_metadata()}};
}

std::string serialize_model(const Model& model) {
  return ndiff::serialize_params(model.params(), model_header(model));
}

void save_model(const std::filesystem::path& path, const Model& model) {
  ndiff::save_params(path, model.params(), model_header(model));
}

std::unique_ptr<Model> model_from_file(const ndiff::ParamFile& file) {
  const auto& h = file.header;
  if (!h.is_object() || h.value("format", std::string()) != kFormatTag)
    throw Error("parameter file does not describe a segmentation model");
  try {
    const TrainConfig config = TrainConfig::from_json(h.at("config"));
    if (to_string(config.kind) != h.at("kind").get<std::string>())
      throw Error("model kind in header disagrees with its configuration");
    std::u32string chars;
    for (uint32_t c : h.at("vocabulary").get<std::vector<uint32_t>>())
      chars.push_back(static_cast<char32_t>(c));
    auto model = create_model(config, Vocabulary(chars));
    model->load_extra_metadata(h.value("extra", nlohmann::json::object()));
    ndiff::assign_params(model->params(), file);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("corrupt model header: ") + e.what());
  }
}

std::unique_ptr<Model> load_model(const std::filesystem::path& path) {
  return model_from_file(ndiff::load_param_file(path));
}

void load_parameters_into(Model& model, const std::filesystem::path& path) {
  ndiff::assign_params(model.params(), ndiff::load_param_file(path));
}

}  // namespace canseg
