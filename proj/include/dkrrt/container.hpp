#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>

#include "dkrrt/linalg.hpp"

namespace dkrrt {

/**
 * Keyed bag of matrices, strings and scalars with a self-describing binary
 * layout. Every serializable type in the library (snapshot datasets,
 * operators, dictionaries, training checkpoints) is stored through this.
 *
 * Layout (all integers little-endian):
 *
 *   magic   "DKRC"          4 bytes
 *   version u32             currently 1
 *   count   u32             number of entries
 *   entry*  count times, sorted by key:
 *     key_len u32, key bytes (UTF-8)
 *     tag     u8            0 matrix, 1 string, 2 f64 scalar, 3 i64 integer
 *     matrix: rows u64, cols u64, rows*cols f64 row-major
 *     string: len u32, bytes
 *     f64:    8 bytes IEEE-754
 *     i64:    8 bytes two's complement
 */
class Container {
 public:
  using Value = std::variant<MatrixXd, std::string, double, std::int64_t>;

  static constexpr std::uint32_t kVersion = 1;

  void put(const std::string& key, const MatrixXd& m) { entries_[key] = m; }
  void put(const std::string& key, const VectorXd& v) { entries_[key] = MatrixXd(v); }
  void put(const std::string& key, std::string s) { entries_[key] = std::move(s); }
  void put(const std::string& key, const char* s) { entries_[key] = std::string(s); }
  void put(const std::string& key, double x) { entries_[key] = x; }
  void put(const std::string& key, std::int64_t x) { entries_[key] = x; }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const MatrixXd& matrix(const std::string& key) const;
  VectorXd vector(const std::string& key) const;
  const std::string& str(const std::string& key) const;
  double scalar(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;

  /// Copies every entry under `prefix + "/"` into a fresh container with the prefix stripped.
  Container sub(const std::string& prefix) const;
  /// Inserts every entry of `other` under `prefix + "/"`.
  void merge(const std::string& prefix, const Container& other);

  const std::map<std::string, Value>& entries() const { return entries_; }

  void write(std::ostream& os) const;
  static Container read(std::istream& is);

  void save(const std::filesystem::path& path) const;
  static Container load(const std::filesystem::path& path);

  bool operator==(const Container& other) const;

 private:
  const Value& at(const std::string& key) const;

  std::map<std::string, Value> entries_;
};

}  // namespace dkrrt
