#ifndef CANSEG_NDIFF_PARAMS_IO_H_
#define CANSEG_NDIFF_PARAMS_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "canseg/ndiff/graph.h"
#include "nlohmann/json.hpp"

namespace canseg::ndiff {

// Parameter file layout (all integers little-endian):
//
//   "CSEGPRM1"                      8-byte magic
//   u32 version                      kParamFormatVersion
//   u32 n, n bytes                   JSON header (model tag, metadata)
//   u32 count                        number of arrays
//   count x { u32 len, name bytes,
//             u32 rank, rank x i32 extents,
//             f64 values... }        IEEE-754 binary64, row-major
//   "CSEGEND\n"                      8-byte trailer
//
// Values are copied bit-for-bit, so a save/load round trip is exact.
inline constexpr uint32_t kParamFormatVersion = 1;

struct NamedArray {
  std::string name;
  Tensor value;
};

struct ParamFile {
  nlohmann::json header;
  std::vector<NamedArray> arrays;
};

void save_params(const std::filesystem::path& path, const ParameterSet& params,
                 const nlohmann::json& header);
std::string serialize_params(const ParameterSet& params, const nlohmann::json& header);

// Throws Error for unreadable, truncated or wrong-version files.
ParamFile load_param_file(const std::filesystem::path& path);
ParamFile parse_params(const std::string& bytes);

// Copies arrays into `params`. Names, order and shapes must match exactly;
// otherwise throws ShapeError and leaves `params` unchanged.
void assign_params(ParameterSet& params, const ParamFile& file);

}  // namespace canseg::ndiff

#endif  // CANSEG_NDIFF_PARAMS_IO_H_
