#include "vms/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace vms {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  put_u64(out, std::bit_cast<std::uint64_t>(d));
}

}  // namespace

std::vector<std::uint8_t> encode_arrays(const std::vector<NamedArray>& arrays) {
  std::vector<std::uint8_t> out;
  for (const auto& [name, array] : arrays) {
    nlohmann::ordered_json header;
    header["name"] = name;
    header["shape"] = array.shape();
    header["dtype"] = "f64";
    const std::string text = header.dump() + "\n";
    put_u64(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    for (double v : array.data()) put_f64(out, v);
  }
  return out;
}

std::vector<NamedArray> decode_arrays(const std::vector<std::uint8_t>& bytes) {
  std::vector<NamedArray> arrays;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::string entry = "entry " + std::to_string(arrays.size());
    if (bytes.size() - pos < 8) throw FormatError(entry + ": truncated header length");
    const std::uint64_t header_len = get_u64(bytes.data() + pos);
    pos += 8;
    if (header_len == 0 || header_len > bytes.size() - pos) {
      throw FormatError(entry + ": header length out of range");
    }
    std::string text(reinterpret_cast<const char*>(bytes.data() + pos), header_len);
    pos += header_len;
    if (text.back() != '\n') throw FormatError(entry + ": header not newline-terminated");
    text.pop_back();

    nlohmann::json header;
    try {
      header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(entry + ": malformed header JSON: " + e.what());
    }
    if (!header.contains("name") || !header.contains("shape") || !header.contains("dtype")) {
      throw FormatError(entry + ": header missing name/shape/dtype");
    }
    const auto name = header["name"].get<std::string>();
    if (header["dtype"] != "f64") throw FormatError(name + ": unsupported dtype");
    const auto shape = header["shape"].get<Shape>();
    const std::size_t n = shape_numel(shape);
    if (n > (bytes.size() - pos) / 8) throw FormatError(name + ": truncated data");
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
      data[i] = std::bit_cast<double>(get_u64(bytes.data() + pos));
      pos += 8;
    }
    arrays.push_back({name, Array(shape, std::move(data))});
  }
  return arrays;
}

void write_arrays(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
  const auto bytes = encode_arrays(arrays);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<NamedArray> read_arrays(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_arrays(bytes);
}

const Array& find_array(const std::vector<NamedArray>& arrays, const std::string& name) {
  for (const auto& a : arrays) {
    if (a.name == name) return a.array;
  }
  throw FormatError("array '" + name + "' not found in container");
}

std::uint64_t fnv1a64(const Array& a) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : a.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace vms
