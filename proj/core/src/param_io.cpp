#include "imitree/param_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "imitree/error.hpp"

namespace imitree::nn {
namespace {

constexpr char kMagic[8] = {'I', 'M', 'T', 'R', 'P', 'A', 'R', 'M'};

static_assert(std::endian::native == std::endian::little, "param archives assume a little-endian host");

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw InvalidArgument("param archive: truncated file");
  return v;
}

ParamArray from_matrix(const Eigen::MatrixXd& m) {
  ParamArray a;
  a.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  a.data.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.data[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return a;
}

}  // namespace

void ParamArchive::put(const std::string& key, ParamArray array) {
  std::uint64_t n = 1;
  for (auto d : array.shape) n *= d;
  if (n != array.data.size()) throw InvalidArgument("ParamArchive::put: shape does not match data for " + key);
  entries_[key] = std::move(array);
}

void ParamArchive::put_text(const std::string& key, std::string text) { entries_[key] = std::move(text); }

void ParamArchive::put_scalar(const std::string& key, double v) { put(key, ParamArray{{1}, {v}}); }

const ParamArray& ParamArchive::array(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw InvalidArgument("param archive: missing key '" + key + "'");
  if (!std::holds_alternative<ParamArray>(it->second)) throw InvalidArgument("param archive: '" + key + "' is text");
  return std::get<ParamArray>(it->second);
}

const std::string& ParamArchive::text(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw InvalidArgument("param archive: missing key '" + key + "'");
  if (!std::holds_alternative<std::string>(it->second)) throw InvalidArgument("param archive: '" + key + "' is not text");
  return std::get<std::string>(it->second);
}

double ParamArchive::scalar(const std::string& key) const {
  const auto& a = array(key);
  if (a.data.size() != 1) throw InvalidArgument("param archive: '" + key + "' is not a scalar");
  return a.data[0];
}

std::vector<std::string> ParamArchive::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

void ParamArchive::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw RuntimeError("param archive: cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [key, value] : entries_) {
    write_pod(os, static_cast<std::uint32_t>(key.size()));
    os.write(key.data(), static_cast<std::streamsize>(key.size()));
    if (const auto* arr = std::get_if<ParamArray>(&value)) {
      write_pod(os, std::uint8_t{0});
      write_pod(os, static_cast<std::uint32_t>(arr->shape.size()));
      for (auto d : arr->shape) write_pod(os, d);
      os.write(reinterpret_cast<const char*>(arr->data.data()),
               static_cast<std::streamsize>(arr->data.size() * sizeof(double)));
    } else {
      const auto& s = std::get<std::string>(value);
      write_pod(os, std::uint8_t{1});
      write_pod(os, static_cast<std::uint64_t>(s.size()));
      os.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
  }
  if (!os) throw RuntimeError("param archive: write failed for " + path.string());
}

ParamArchive ParamArchive::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("param archive: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw InvalidArgument("param archive: bad magic in " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion) throw InvalidArgument("param archive: unsupported version " + std::to_string(version));
  const auto count = read_pod<std::uint32_t>(is);
  ParamArchive ar;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto key_len = read_pod<std::uint32_t>(is);
    std::string key(key_len, '\0');
    is.read(key.data(), key_len);
    const auto kind = read_pod<std::uint8_t>(is);
    if (kind == 0) {
      ParamArray arr;
      const auto ndim = read_pod<std::uint32_t>(is);
      std::uint64_t n = 1;
      for (std::uint32_t d = 0; d < ndim; ++d) {
        arr.shape.push_back(read_pod<std::uint64_t>(is));
        n *= arr.shape.back();
      }
      arr.data.resize(n);
      is.read(reinterpret_cast<char*>(arr.data.data()), static_cast<std::streamsize>(n * sizeof(double)));
      if (!is) throw InvalidArgument("param archive: truncated array '" + key + "'");
      ar.entries_[key] = std::move(arr);
    } else if (kind == 1) {
      const auto len = read_pod<std::uint64_t>(is);
      std::string s(len, '\0');
      is.read(s.data(), static_cast<std::streamsize>(len));
      if (!is) throw InvalidArgument("param archive: truncated text '" + key + "'");
      ar.entries_[key] = std::move(s);
    } else {
      throw InvalidArgument("param archive: unknown entry kind for '" + key + "'");
    }
  }
  return ar;
}

void export_layers(const std::vector<Layer>& layers, const std::string& prefix, ParamArchive& ar) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    ar.put(prefix + ".w" + std::to_string(l), from_matrix(layers[l].weight));
    ar.put(prefix + ".b" + std::to_string(l), from_matrix(layers[l].bias));
  }
}

void import_layers(std::vector<Layer>& layers, const std::string& prefix, const ParamArchive& ar) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = ar.array(prefix + ".w" + std::to_string(l));
    const auto& b = ar.array(prefix + ".b" + std::to_string(l));
    auto& layer = layers[l];
    if (w.shape != std::vector<std::uint64_t>{static_cast<std::uint64_t>(layer.weight.rows()),
                                              static_cast<std::uint64_t>(layer.weight.cols())} ||
        b.data.size() != static_cast<std::size_t>(layer.bias.size())) {
      throw InvalidArgument("param archive: shape mismatch at " + prefix + " layer " + std::to_string(l));
    }
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
        layer.weight(i, j) = w.data[static_cast<std::size_t>(i * layer.weight.cols() + j)];
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = b.data[static_cast<std::size_t>(i)];
  }
}

}  // namespace imitree::nn
