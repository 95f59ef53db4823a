#include "table/numerics/param_file.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace table::numerics {

namespace {

constexpr std::array<char, 8> kMagic = {'T', 'B', 'L', 'P', 'A', 'R', 'A', 'M'};

void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

const NamedTensor& ParamFile::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw ParamFileError("parameter '" + name + "' missing from file");
}

void write_param_file(const std::filesystem::path& path, const ParamFile& file) {
  nlohmann::json header;
  header["meta"] = file.meta;
  header["tensors"] = nlohmann::json::array();
  std::string payload;
  for (const auto& t : file.tensors) {
    if (shape_numel(t.shape) != t.values.size()) {
      throw ParamFileError("tensor '" + t.name + "' shape does not match its values");
    }
    header["tensors"].push_back({{"name", t.name},
                                 {"dtype", "f32"},
                                 {"shape", t.shape},
                                 {"offset", payload.size()},
                                 {"nbytes", t.values.size() * 4}});
    for (float v : t.values) put_u32_le(payload, std::bit_cast<std::uint32_t>(v));
  }
  const std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParamFileError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  std::uint64_t len = header_text.size();
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((len >> (8 * i)) & 0xffu));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw ParamFileError("write failed for " + path.string());
}

ParamFile read_param_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParamFileError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw ParamFileError(path.string() + " is not a parameter file");
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  std::uint64_t header_len = 0;
  for (int i = 0; i < 8; ++i) header_len |= static_cast<std::uint64_t>(raw[8 + i]) << (8 * i);
  if (16 + header_len > bytes.size()) throw ParamFileError("truncated header in " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16,
                                   bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParamFileError("malformed header in " + path.string() + ": " + e.what());
  }
  const std::size_t payload_start = 16 + header_len;
  const std::size_t payload_size = bytes.size() - payload_start;

  ParamFile file;
  file.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    NamedTensor t;
    t.name = entry.at("name").get<std::string>();
    if (entry.at("dtype").get<std::string>() != "f32") {
      throw ParamFileError("tensor '" + t.name + "' has unsupported dtype");
    }
    t.shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto nbytes = entry.at("nbytes").get<std::size_t>();
    if (nbytes != shape_numel(t.shape) * 4 || offset + nbytes > payload_size) {
      throw ParamFileError("tensor '" + t.name + "' has inconsistent extent");
    }
    t.values.resize(shape_numel(t.shape));
    const unsigned char* p = raw + payload_start + offset;
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      t.values[i] = std::bit_cast<float>(get_u32_le(p + 4 * i));
    }
    file.tensors.push_back(std::move(t));
  }
  return file;
}

}  // namespace table::numerics
