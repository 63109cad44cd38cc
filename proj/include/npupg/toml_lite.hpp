#pragma once
// Minimal TOML-subset reader: [section] / [[array-of-tables]] headers with
// dotted names, key = value lines, #-comments, and scalar/array values.
// Covers the config schema used by this project; not a general TOML parser.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "npupg/util.hpp"

namespace npupg::toml {

struct Value;

struct Table {
  std::map<std::string, Value> entries;
  std::map<std::string, std::vector<Table>> table_arrays;
  std::map<std::string, std::unique_ptr<Table>> subtables;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  const Table* subtable(const std::string& name) const;

  // Typed getters; `key` is a plain key inside this table. Throw ConfigError on
  // missing/mistyped values unless a default overload is used.
  int64_t get_int(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t dflt) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& dflt) const;
  std::vector<double> get_double_array(const std::string& key) const;
  std::vector<std::string> get_string_array(const std::string& key) const;
  std::vector<std::string> keys() const;
};

struct Value {
  enum class Kind { Int, Float, Bool, String, Array } kind = Kind::Int;
  int64_t i = 0;
  double f = 0.0;
  bool b = false;
  std::string s;
  std::vector<Value> array;
};

Table parse(const std::string& text, const std::string& origin);
Table parse_file(const std::string& path);

}  // namespace npupg::toml
