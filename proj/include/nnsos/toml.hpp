#pragma once

#include <map>
#include <string>
#include <vector>

#include "nnsos/poly.hpp"

namespace nnsos {

// Minimal TOML subset for system-definition files: [tables], key = value,
// strings, numbers, booleans and flat homogeneous arrays, with # comments.
// Keys are flattened to "table.key". Parse errors carry line numbers.
class TomlTable {
 public:
  struct Value {
    enum class Kind { String, Number, Bool, Array };
    Kind kind = Kind::String;
    std::string str;
    double num = 0.0;
    bool boolean = false;
    std::vector<Value> items;
    int line = 0;
  };

  static TomlTable parse_text(const std::string& text);
  static TomlTable parse_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key) const;
  double get_number(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_string_array(const std::string& key) const;
  std::vector<double> get_number_array(const std::string& key) const;

  std::string get_string_or(const std::string& key, const std::string& d) const;
  double get_number_or(const std::string& key, double d) const;
  bool get_bool_or(const std::string& key, bool d) const;

  std::vector<std::string> keys() const;

 private:
  const Value& require(const std::string& key, Value::Kind kind) const;
  std::map<std::string, Value> values_;
};

}  // namespace nnsos
