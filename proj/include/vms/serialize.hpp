#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vms/array.hpp"

namespace vms {

struct NamedArray {
  std::string name;
  Array array;
};

// Container layout, repeated once per entry:
//
//   u64 LE   header length in bytes (JSON text plus the trailing '\n')
//   bytes    {"name":"...","shape":[...],"dtype":"f64"}\n
//   bytes    numel * 8 bytes, little-endian IEEE-754 binary64
//
// Round-trips are bit-exact.
std::vector<std::uint8_t> encode_arrays(const std::vector<NamedArray>& arrays);
std::vector<NamedArray> decode_arrays(const std::vector<std::uint8_t>& bytes);

void write_arrays(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_arrays(const std::filesystem::path& path);

// Lookup by name; throws FormatError when absent.
const Array& find_array(const std::vector<NamedArray>& arrays, const std::string& name);

// FNV-1a over the little-endian value bytes; used by golden manifests.
std::uint64_t fnv1a64(const Array& a);

}  // namespace vms
