#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "table/numerics/tensor.hpp"

namespace table::numerics {

class ParamFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

/// Named-parameter container.
///
/// Layout: 8-byte magic "TBLPARAM", little-endian u64 header length, UTF-8
/// JSON header {"meta": ..., "tensors": [{"name", "dtype": "f32", "shape",
/// "offset", "nbytes"}]}, then the concatenated little-endian f32 payload.
/// Offsets are relative to the start of the payload.
struct ParamFile {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const NamedTensor& find(const std::string& name) const;
};

void write_param_file(const std::filesystem::path& path, const ParamFile& file);
ParamFile read_param_file(const std::filesystem::path& path);

}  // namespace table::numerics
