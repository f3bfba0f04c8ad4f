#ifndef CANSEG_MODEL_IO_H_
#define CANSEG_MODEL_IO_H_

#include <filesystem>
#include <memory>

#include "canseg/model.h"
#include "canseg/ndiff/params_io.h"

namespace canseg {

// A model file is a parameter file whose JSON header records the model
// kind, the full TrainConfig, the vocabulary characters and model-specific
// metadata, so load_model can rebuild the architecture before assigning.
nlohmann::json model_header(const Model& model);
void save_model(const std::filesystem::path& path, const Model& model);
std::string serialize_model(const Model& model);

// Throws Error for unreadable files and ShapeError if the stored arrays do
// not fit the architecture described by the header.
std::unique_ptr<Model> load_model(const std::filesystem::path& path);
std::unique_ptr<Model> model_from_file(const ndiff::ParamFile& file);

// Copies the parameters of a model file into an existing model. Throws
// ShapeError when names or shapes differ (e.g. another model kind).
void load_parameters_into(Model& model, const std::filesystem::path& path);

}  // namespace canseg

#endif  // CANSEG_MODEL_IO_H_
