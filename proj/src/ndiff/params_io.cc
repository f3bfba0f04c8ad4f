#include "canseg/ndiff/params_io.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include "canseg/errors.h"

namespace canseg::ndiff {

namespace {

constexpr char kMagic[8] = {'C', 'S', 'E', 'G', 'P', 'R', 'M', '1'};
constexpr char kTrailer[8] = {'C', 'S', 'E', 'G', 'E', 'N', 'D', '\n'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string take(size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void read_doubles(double* dst, size_t n) {
    need(n * sizeof(double));
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("parameter file is truncated");
  }

  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::string serialize_params(const ParameterSet& params, const nlohmann::json& header) {
  std::string out(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kParamFormatVersion);
  const std::string head = header.dump();
  put<uint32_t>(out, static_cast<uint32_t>(head.size()));
  out += head;
  put<uint32_t>(out, static_cast<uint32_t>(params.size()));
  for (const auto& p : params.all()) {
    put<uint32_t>(out, static_cast<uint32_t>(p->name.size()));
    out += p->name;
    put<uint32_t>(out, static_cast<uint32_t>(p->value.rank()));
    for (int e : p->value.shape()) put<int32_t>(out, e);
    out.append(reinterpret_cast<const char*>(p->value.data()), p->value.size() * sizeof(double));
  }
  out.append(kTrailer, sizeof(kTrailer));
  return out;
}

void save_params(const std::filesystem::path& path, const ParameterSet& params,
                 const nlohmann::json& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << serialize_params(params, header);
  if (!out) throw Error("cannot write " + path.string());
}

ParamFile parse_params(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw Error("not a parameter file (bad magic)");
  const auto version = in.get<uint32_t>();
  if (version != kParamFormatVersion) {
    throw Error("unsupported parameter file version " + std::to_string(version) +
                " (expected " + std::to_string(kParamFormatVersion) + ")");
  }
  ParamFile file;
  const auto head_len = in.get<uint32_t>();
  try {
    file.header = nlohmann::json::parse(in.take(head_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("corrupt parameter file header: ") + e.what());
  }
  const auto count = in.get<uint32_t>();
  for (uint32_t k = 0; k < count; ++k) {
    NamedArray arr;
    arr.name = in.take(in.get<uint32_t>());
    const auto rank = in.get<uint32_t>();
    if (rank < 1 || rank > 2) throw Error("corrupt parameter file: rank " + std::to_string(rank));
    Shape shape;
    for (uint32_t d = 0; d < rank; ++d) shape.push_back(in.get<int32_t>());
    try {
      arr.value = Tensor(shape);
    } catch (const ShapeError& e) {
      throw Error(std::string("corrupt parameter file: ") + e.what());
    }
    in.read_doubles(arr.value.data(), arr.value.size());
    file.arrays.push_back(std::move(arr));
  }
  if (in.take(sizeof(kTrailer)) != std::string(kTrailer, sizeof(kTrailer)))
    throw Error("parameter file is truncated (missing trailer)");
  if (!in.at_end()) throw Error("trailing bytes after parameter file trailer");
  return file;
}

ParamFile load_param_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open parameter file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_params(buf.str());
}

void assign_params(ParameterSet& params, const ParamFile& file) {
  const auto& all = params.all();
  if (all.size() != file.arrays.size()) {
    throw ShapeError("parameter count mismatch: model has " + std::to_string(all.size()) +
                     ", file has " + std::to_string(file.arrays.size()));
  }
  for (size_t k = 0; k < all.size(); ++k) {
    const auto& arr = file.arrays[k];
    if (arr.name != all[k]->name)
      throw ShapeError("parameter " + std::to_string(k) + " is '" + arr.name +
                       "' in file, expected '" + all[k]->name + "'");
    if (!arr.value.same_shape(all[k]->value))
      throw ShapeError("parameter '" + arr.name + "' has shape " +
                       shape_string(arr.value.shape()) + " in file, expected " +
                       shape_string(all[k]->value.shape()));
  }
  for (size_t k = 0; k < all.size(); ++k) all[k]->value = file.arrays[k].value;
}

}  // namespace canseg::ndiff
