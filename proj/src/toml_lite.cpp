#include "npupg/toml_lite.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace npupg::toml {
namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strip a trailing comment that is not inside a basic string.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (size_t i = 0; i < s.size(); i++) {
    char c = s[i];
    if (c == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (c == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

std::vector<std::string> split_dotted(const std::string& name, const std::string& origin, int line) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : name) {
    if (c == '.') {
      if (cur.empty()) fail(origin, line, "empty name component in '" + name + "'");
      parts.push_back(cur);
      cur.clear();
    } else if (std::isalnum(uint8_t(c)) || c == '_' || c == '-') {
      cur += c;
    } else if (c == ' ' || c == '\t') {
      // permit stray spaces around dots
    } else {
      fail(origin, line, std::string("unexpected character '") + c + "' in name");
    }
  }
  if (cur.empty()) fail(origin, line, "empty name component in '" + name + "'");
  parts.push_back(cur);
  return parts;
}

struct Parser {
  const std::string& origin;
  int line = 0;

  Value parse_value(const std::string& raw) {
    std::string v = trim(raw);
    if (v.empty()) fail(origin, line, "missing value");
    Value out;
    if (v.front() == '"') {
      if (v.size() < 2 || v.back() != '"') fail(origin, line, "unterminated string");
      out.kind = Value::Kind::String;
      std::string s;
      for (size_t i = 1; i + 1 < v.size(); i++) {
        if (v[i] == '\\' && i + 2 < v.size()) {
          i++;
          switch (v[i]) {
            case 'n': s += '\n'; break;
            case 't': s += '\t'; break;
            case '"': s += '"'; break;
            case '\\': s += '\\'; break;
            default: fail(origin, line, "unsupported escape in string");
          }
        } else {
          s += v[i];
        }
      }
      out.s = s;
      return out;
    }
    if (v.front() == '[') {
      if (v.back() != ']') fail(origin, line, "unterminated array");
      out.kind = Value::Kind::Array;
      std::string body = v.substr(1, v.size() - 2);
      std::string cur;
      int depth = 0;
      bool in_str = false;
      for (char c : body) {
        if (c == '"') in_str = !in_str;
        if (!in_str) {
          if (c == '[') depth++;
          if (c == ']') depth--;
          if (c == ',' && depth == 0) {
            if (!trim(cur).empty()) out.array.push_back(parse_value(cur));
            cur.clear();
            continue;
          }
        }
        cur += c;
      }
      if (!trim(cur).empty()) out.array.push_back(parse_value(cur));
      return out;
    }
    if (v == "true" || v == "false") {
      out.kind = Value::Kind::Bool;
      out.b = (v == "true");
      return out;
    }
    // number: int unless it has '.', 'e', or 'E'
    bool is_float = v.find_first_of(".eE") != std::string::npos &&
                    v.find("0x") != 0 && v.find("0b") != 0;
    errno = 0;
    char* end = nullptr;
    if (is_float) {
      out.kind = Value::Kind::Float;
      out.f = std::strtod(v.c_str(), &end);
    } else {
      out.kind = Value::Kind::Int;
      int base = 10;
      const char* p = v.c_str();
      bool neg = false;
      if (*p == '-') { neg = true; p++; }
      if (p[0] == '0' && (p[1] == 'x' || p[1] == 'X')) { base = 16; p += 2; }
      else if (p[0] == '0' && (p[1] == 'b' || p[1] == 'B')) { base = 2; p += 2; }
      out.i = int64_t(std::strtoll(p, &end, base));
      if (neg) out.i = -out.i;
    }
    if (end == nullptr || *end != '\0' || errno == ERANGE)
      fail(origin, line, "malformed number '" + v + "'");
    return out;
  }
};

Table* descend(Table* t, const std::vector<std::string>& parts, size_t upto) {
  for (size_t i = 0; i < upto; i++) {
    auto& slot = t->subtables[parts[i]];
    if (!slot) slot = std::make_unique<Table>();
    t = slot.get();
  }
  return t;
}

}  // namespace

const Table* Table::subtable(const std::string& name) const {
  auto it = subtables.find(name);
  return it == subtables.end() ? nullptr : it->second.get();
}

static const Value* find_entry(const Table& t, const std::string& key) {
  auto it = t.entries.find(key);
  return it == t.entries.end() ? nullptr : &it->second;
}

int64_t Table::get_int(const std::string& key) const {
  const Value* v = find_entry(*this, key);
  if (!v) throw ConfigError("missing required key '" + key + "'");
  if (v->kind == Value::Kind::Int) return v->i;
  throw ConfigError("key '" + key + "' is not an integer");
}
int64_t Table::get_int(const std::string& key, int64_t dflt) const {
  return has(key) ? get_int(key) : dflt;
}
double Table::get_double(const std::string& key) const {
  const Value* v = find_entry(*this, key);
  if (!v) throw ConfigError("missing required key '" + key + "'");
  if (v->kind == Value::Kind::Float) return v->f;
  if (v->kind == Value::Kind::Int) return double(v->i);
  throw ConfigError("key '" + key + "' is not a number");
}
double Table::get_double(const std::string& key, double dflt) const {
  return has(key) ? get_double(key) : dflt;
}
bool Table::get_bool(const std::string& key, bool dflt) const {
  const Value* v = find_entry(*this, key);
  if (!v) return dflt;
  if (v->kind != Value::Kind::Bool) throw ConfigError("key '" + key + "' is not a bool");
  return v->b;
}
std::string Table::get_string(const std::string& key) const {
  const Value* v = find_entry(*this, key);
  if (!v) throw ConfigError("missing required key '" + key + "'");
  if (v->kind != Value::Kind::String) throw ConfigError("key '" + key + "' is not a string");
  return v->s;
}
std::string Table::get_string(const std::string& key, const std::string& dflt) const {
  return has(key) ? get_string(key) : dflt;
}
std::vector<double> Table::get_double_array(const std::string& key) const {
  const Value* v = find_entry(*this, key);
  if (!v) throw ConfigError("missing required key '" + key + "'");
  if (v->kind != Value::Kind::Array) throw ConfigError("key '" + key + "' is not an array");
  std::vector<double> out;
  for (const Value& e : v->array) {
    if (e.kind == Value::Kind::Float) out.push_back(e.f);
    else if (e.kind == Value::Kind::Int) out.push_back(double(e.i));
    else throw ConfigError("array '" + key + "' holds a non-number");
  }
  return out;
}
std::vector<std::string> Table::get_string_array(const std::string& key) const {
  const Value* v = find_entry(*this, key);
  if (!v) throw ConfigError("missing required key '" + key + "'");
  if (v->kind != Value::Kind::Array) throw ConfigError("key '" + key + "' is not an array");
  std::vector<std::string> out;
  for (const Value& e : v->array) {
    if (e.kind != Value::Kind::String) throw ConfigError("array '" + key + "' holds a non-string");
    out.push_back(e.s);
  }
  return out;
}
std::vector<std::string> Table::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries) out.push_back(k);
  return out;
}

Table parse(const std::string& text, const std::string& origin) {
  Table root;
  Table* current = &root;
  Parser p{origin};
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    p.line++;
    std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      bool is_array = s.size() > 1 && s[1] == '[';
      size_t close = s.find(is_array ? "]]" : "]");
      if (close == std::string::npos) fail(origin, p.line, "unterminated table header");
      std::string name = trim(s.substr(is_array ? 2 : 1, close - (is_array ? 2 : 1)));
      auto parts = split_dotted(name, origin, p.line);
      if (is_array) {
        Table* parent = descend(&root, parts, parts.size() - 1);
        parent->table_arrays[parts.back()].emplace_back();
        current = &parent->table_arrays[parts.back()].back();
      } else {
        current = descend(&root, parts, parts.size());
      }
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail(origin, p.line, "expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    if (key.empty()) fail(origin, p.line, "empty key");
    auto parts = split_dotted(key, origin, p.line);
    Table* t = current;
    for (size_t i = 0; i + 1 < parts.size(); i++) {
      auto& slot = t->subtables[parts[i]];
      if (!slot) slot = std::make_unique<Table>();
      t = slot.get();
    }
    if (t->entries.count(parts.back()))
      fail(origin, p.line, "duplicate key '" + key + "'");
    t->entries[parts.back()] = p.parse_value(s.substr(eq + 1));
  }
  return root;
}

Table parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

}  // namespace npupg::toml
