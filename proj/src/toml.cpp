#include "nnsos/toml.hpp"

#include <cctype>
#include <limits>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace nnsos {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw Error("definition parse error at line " + std::to_string(line) + ": " +
              what);
}

std::string_view strip(std::string_view s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Removes a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

TomlTable::Value parse_scalar(std::string_view text, int line) {
  TomlTable::Value v;
  v.line = line;
  text = strip(text);
  if (text.empty()) fail(line, "empty value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"')
      fail(line, "unterminated string");
    v.kind = TomlTable::Value::Kind::String;
    v.str = std::string(text.substr(1, text.size() - 2));
    return v;
  }
  if (text == "true" || text == "false") {
    v.kind = TomlTable::Value::Kind::Bool;
    v.boolean = text == "true";
    return v;
  }
  if (text == "inf") {
    v.kind = TomlTable::Value::Kind::Number;
    v.num = std::numeric_limits<double>::infinity();
    return v;
  }
  const char* begin = text.data();
  char* end = nullptr;
  double d = std::strtod(begin, &end);
  if (end != begin + text.size())
    fail(line, "cannot parse value '" + std::string(text) + "'");
  v.kind = TomlTable::Value::Kind::Number;
  v.num = d;
  return v;
}

TomlTable::Value parse_value(std::string_view text, int line) {
  text = strip(text);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') fail(line, "unterminated array");
    TomlTable::Value v;
    v.kind = TomlTable::Value::Kind::Array;
    v.line = line;
    std::string_view body = text.substr(1, text.size() - 2);
    // Split on commas outside strings.
    std::size_t start = 0;
    bool in_str = false;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i < body.size() && body[i] == '"') in_str = !in_str;
      if (i == body.size() || (body[i] == ',' && !in_str)) {
        std::string_view piece = strip(body.substr(start, i - start));
        if (!piece.empty()) v.items.push_back(parse_scalar(piece, line));
        start = i + 1;
      }
    }
    return v;
  }
  return parse_scalar(text, line);
}

}  // namespace

TomlTable TomlTable::parse_text(const std::string& text) {
  TomlTable t;
  std::istringstream in(text);
  std::string line;
  std::string prefix;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = strip(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(lineno, "unterminated table header");
      std::string_view name = strip(s.substr(1, s.size() - 2));
      if (name.empty()) fail(lineno, "empty table name");
      prefix = std::string(name) + ".";
      continue;
    }
    std::size_t eq = std::string_view::npos;
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') in_str = !in_str;
      if (s[i] == '=' && !in_str) {
        eq = i;
        break;
      }
    }
    if (eq == std::string_view::npos) fail(lineno, "expected key = value");
    std::string key = std::string(strip(s.substr(0, eq)));
    if (key.empty()) fail(lineno, "empty key");
    // Multi-line arrays: keep consuming lines until brackets balance.
    std::string vtext(strip(s.substr(eq + 1)));
    int value_line = lineno;
    auto bracket_balance = [](const std::string& text) {
      int depth = 0;
      bool instr = false;
      for (char c : text) {
        if (c == '"') instr = !instr;
        if (instr) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
      }
      return depth;
    };
    while (bracket_balance(vtext) > 0) {
      std::string cont;
      if (!std::getline(in, cont)) fail(value_line, "unterminated array");
      ++lineno;
      vtext += " ";
      vtext += std::string(strip(strip_comment(cont)));
    }
    Value v = parse_value(vtext, value_line);
    std::string full = prefix + key;
    if (t.values_.count(full)) fail(lineno, "duplicate key '" + full + "'");
    t.values_.emplace(std::move(full), std::move(v));
  }
  return t;
}

TomlTable TomlTable::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open definition file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

const TomlTable::Value& TomlTable::require(const std::string& key,
                                           Value::Kind kind) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error("definition is missing key '" + key + "'");
  if (it->second.kind != kind)
    throw Error("definition key '" + key + "' has the wrong type (line " +
                std::to_string(it->second.line) + ")");
  return it->second;
}

std::string TomlTable::get_string(const std::string& key) const {
  return require(key, Value::Kind::String).str;
}

double TomlTable::get_number(const std::string& key) const {
  return require(key, Value::Kind::Number).num;
}

bool TomlTable::get_bool(const std::string& key) const {
  return require(key, Value::Kind::Bool).boolean;
}

std::vector<std::string> TomlTable::get_string_array(
    const std::string& key) const {
  const Value& v = require(key, Value::Kind::Array);
  std::vector<std::string> out;
  for (auto& item : v.items) {
    if (item.kind != Value::Kind::String)
      throw Error("definition key '" + key + "' must be an array of strings");
    out.push_back(item.str);
  }
  return out;
}

std::vector<double> TomlTable::get_number_array(const std::string& key) const {
  const Value& v = require(key, Value::Kind::Array);
  std::vector<double> out;
  for (auto& item : v.items) {
    if (item.kind != Value::Kind::Number)
      throw Error("definition key '" + key + "' must be an array of numbers");
    out.push_back(item.num);
  }
  return out;
}

std::string TomlTable::get_string_or(const std::string& key,
                                     const std::string& d) const {
  return has(key) ? get_string(key) : d;
}

double TomlTable::get_number_or(const std::string& key, double d) const {
  return has(key) ? get_number(key) : d;
}

bool TomlTable::get_bool_or(const std::string& key, bool d) const {
  return has(key) ? get_bool(key) : d;
}

std::vector<std::string> TomlTable::keys() const {
  std::vector<std::string> out;
  for (auto& [k, v] : values_) out.push_back(k);
  return out;
}

}  // namespace nnsos
