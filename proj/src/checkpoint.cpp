#include "drf/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace drf {

namespace {

constexpr char kMagic[8] = {'D', 'R', 'F', 'C', 'K', 'P', 'T', '\n'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

const Tensor* NamedTensors::find(const std::string& name) const {
  for (const auto& [n, t] : items) {
    if (n == name) return &t;
  }
  return nullptr;
}

const Tensor& NamedTensors::get(const std::string& name) const {
  const Tensor* t = find(name);
  if (!t) throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
  return *t;
}

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, kCheckpointVersion);
  const std::string m = meta.dump();
  put_u32(os, static_cast<std::uint32_t>(m.size()));
  os.write(m.data(), static_cast<std::streamsize>(m.size()));
  put_u32(os, static_cast<std::uint32_t>(tensors.items.size()));
  for (const auto& [name, t] : tensors.items) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t d : t.shape()) put_u64(os, d);
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint64_t bits;
      const double v = t[i];
      std::memcpy(&bits, &v, sizeof(bits));
      put_u64(os, bits);
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

std::pair<nlohmann::json, NamedTensors> load_checkpoint(
    const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
  }
  const std::uint32_t version = get_u32(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version) + " in '" + path + "'");
  }
  const std::uint32_t mlen = get_u32(is);
  std::string mstr(mlen, '\0');
  is.read(mstr.data(), mlen);
  nlohmann::json meta = nlohmann::json::parse(mstr);
  NamedTensors tensors;
  const std::uint32_t count = get_u32(is);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t nlen = get_u32(is);
    std::string name(nlen, '\0');
    is.read(name.data(), nlen);
    const std::uint32_t ndim = get_u32(is);
    std::vector<std::size_t> shape(ndim);
    for (std::uint32_t d = 0; d < ndim; ++d)
      shape[d] = static_cast<std::size_t>(get_u64(is));
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::uint64_t bits = get_u64(is);
      double v;
      std::memcpy(&v, &bits, sizeof(v));
      t[i] = v;
    }
    if (!is) throw std::runtime_error("checkpoint: truncated file '" + path + "'");
    tensors.items.emplace_back(std::move(name), std::move(t));
  }
  return {std::move(meta), std::move(tensors)};
}

std::uint64_t tensors_checksum(const NamedTensors& tensors) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto fnv = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001B3ULL;
    }
  };
  for (const auto& [name, t] : tensors.items) {
    fnv(name.data(), name.size());
    for (std::size_t d : t.shape()) {
      const std::uint64_t dd = d;
      fnv(&dd, sizeof(dd));
    }
    fnv(t.data(), t.size() * sizeof(double));
  }
  return h;
}

}  // namespace drf
