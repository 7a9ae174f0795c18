#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "imitree/mlp.hpp"

namespace imitree::nn {

/// Named real array; data is row-major over `shape`.
struct ParamArray {
  std::vector<std::uint64_t> shape;
  std::vector<double> data;

  bool operator==(const ParamArray&) const = default;
};

/// Flat key -> array (or text) map persisted with a versioned header.
///
/// Byte layout (all integers little-endian):
///   magic      8 bytes  "IMTRPARM"
///   version    u32      currently 1
///   count      u32      number of entries, written in key order
///   entry:     u32 key_len, key bytes, u8 kind (0 = f64 array, 1 = text)
///     kind 0:  u32 ndim, u64 dims[ndim], f64 data[prod(dims)]
///     kind 1:  u64 len, bytes
class ParamArchive {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put(const std::string& key, ParamArray array);
  void put_text(const std::string& key, std::string text);
  void put_scalar(const std::string& key, double v);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const ParamArray& array(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  double scalar(const std::string& key) const;
  std::vector<std::string> keys() const;

  void save(const std::filesystem::path& path) const;
  static ParamArchive load(const std::filesystem::path& path);

  bool operator==(const ParamArchive&) const = default;

 private:
  std::map<std::string, std::variant<ParamArray, std::string>> entries_;
};

/// Keys: "<prefix>.w<l>" (out x in) and "<prefix>.b<l>" (out), l from 0.
void export_layers(const std::vector<Layer>& layers, const std::string& prefix, ParamArchive& ar);
/// Fills layers whose shapes are already set; throws on any mismatch.
void import_layers(std::vector<Layer>& layers, const std::string& prefix, const ParamArchive& ar);

}  // namespace imitree::nn
