#include "tae/tensor.hpp"

#include <cstring>
#include <fstream>

namespace tae {

namespace {
bool g_debug_checks = false;

void put_u32(std::ofstream& f, uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v & 0xFF), (unsigned char)((v >> 8) & 0xFF),
                        (unsigned char)((v >> 16) & 0xFF), (unsigned char)((v >> 24) & 0xFF)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::ifstream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
         (uint32_t(b[3]) << 24);
}
}  // namespace

void set_tensor_debug_checks(bool on) { g_debug_checks = on; }
bool tensor_debug_checks() { return g_debug_checks; }

void write_tensor_file(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f.write("RTW1", 4);
  put_u32(f, uint32_t(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(f, uint32_t(name.size()));
    f.write(name.data(), std::streamsize(name.size()));
    put_u32(f, uint32_t(t.shape.size()));
    for (int d : t.shape) put_u32(f, uint32_t(d));
    f.write(reinterpret_cast<const char*>(t.v.data()), std::streamsize(t.v.size() * 4));
  }
  if (!f) throw DataError("short write on " + path.string());
}

NamedTensors read_tensor_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "RTW1", 4) != 0)
    throw DataError("bad RTW1 magic in " + path.string());
  const uint32_t count = get_u32(f);
  if (count > (1u << 20)) throw DataError("implausible tensor count in " + path.string());
  NamedTensors out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = get_u32(f);
    if (name_len > 4096) throw DataError("bad tensor name length in " + path.string());
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const uint32_t rank = get_u32(f);
    if (rank > 8) throw DataError("bad tensor rank in " + path.string());
    std::vector<int> shape(rank);
    size_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = int(get_u32(f));
      if (shape[d] <= 0 || size_t(shape[d]) > (1u << 28))
        throw DataError("bad tensor dim in " + path.string());
      n *= size_t(shape[d]);
    }
    NdArray<float> t(shape);
    f.read(reinterpret_cast<char*>(t.v.data()), std::streamsize(n * 4));
    if (!f) throw DataError("truncated tensor file " + path.string());
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

}  // namespace tae
