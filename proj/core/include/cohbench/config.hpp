#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cohbench {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration with typed accessors. Every calibration
// constant in the project lives here under a documented default; unknown
// keys are rejected so typos surface immediately. Precedence is
// defaults < file < command-line overrides.
class Config {
 public:
  enum class Type { U64, F64, Bool };

  struct Entry {
    Type type;
    std::string value;  // canonical text form
    std::string doc;
  };

  Config();  // all defaults

  // `overrides` are "key=value" strings, applied after the file.
  static Config load(const std::string& path,
                     const std::vector<std::string>& overrides);

  void set(std::string_view key, std::string_view value);
  void load_file(const std::string& path);

  bool has(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  double get_f64(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  // Sorted (key, entry) view, for `calibrate` and docs.
  const std::map<std::string, Entry, std::less<>>& entries() const {
    return entries_;
  }

  // Cross-key invariants (positivity, read_width <= write_combine, ...).
  void validate() const;

 private:
  void define(std::string key, Type type, std::string value, std::string doc);
  const Entry& lookup(std::string_view key) const;

  std::map<std::string, Entry, std::less<>> entries_;
};

}  // namespace cohbench
