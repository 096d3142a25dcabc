#pragma once

// Reader for the subset of TOML used by scenario files: comments, [table]
// and [dotted.table] headers, bare keys, and values that are basic strings,
// booleans, integers, floats, or (possibly nested, multi-line) arrays.
// Produces an nlohmann::json object.

#include "lamlab/core.hpp"

#include <json.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lamlab::detail {

class TomlLite {
 public:
  explicit TomlLite(std::string_view text) : s_(text) {}

  nlohmann::json parse() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    for (;;) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_inline_ws();
        std::vector<std::string> path;
        for (;;) {
          path.push_back(bare_key());
          skip_inline_ws();
          if (peek() == '.') {
            ++pos_;
            skip_inline_ws();
            continue;
          }
          break;
        }
        expect(']');
        end_of_line();
        table = &root;
        std::string dotted;
        for (const std::string& k : path) {
          dotted += dotted.empty() ? k : "." + k;
          if (!table->contains(k)) (*table)[k] = nlohmann::json::object();
          table = &(*table)[k];
          if (!table->is_object()) fail("'" + dotted + "' is already a value, not a table");
        }
        if (!defined_tables_.insert_unique(dotted)) fail("table [" + dotted + "] defined twice");
        continue;
      }
      const std::string key = bare_key();
      skip_inline_ws();
      expect('=');
      skip_inline_ws();
      nlohmann::json v = value();
      if (table->contains(key)) fail("duplicate key '" + key + "'");
      (*table)[key] = std::move(v);
      end_of_line();
    }
    return root;
  }

 private:
  struct NameSet {
    std::vector<std::string> names;
    bool insert_unique(const std::string& n) {
      for (const auto& x : names)
        if (x == n) return false;
      names.push_back(n);
      return true;
    }
  };

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    int line = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i)
      if (s_[i] == '\n') ++line;
    std::ostringstream os;
    os << "scenario parse error at line " << line << ": " << what;
    throw InvalidArgument(os.str());
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  // Whitespace, newlines and comments.
  void skip_blank_lines() {
    for (;;) {
      skip_inline_ws();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        ++pos_;
        continue;
      }
      return;
    }
  }

  void end_of_line() {
    skip_inline_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
  }

  std::string bare_key() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
      ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  nlohmann::json value() {
    const char c = peek();
    if (c == '"') return string_value();
    if (c == '[') return array_value();
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return number_value();
  }

  nlohmann::json string_value() {
    ++pos_;
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (eof()) fail("unterminated escape");
      const char e = s_[pos_++];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
    return out;
  }

  nlohmann::json array_value() {
    ++pos_;
    nlohmann::json arr = nlohmann::json::array();
    for (;;) {
      skip_blank_lines();
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(value());
      skip_blank_lines();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  nlohmann::json number_value() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                      peek() == '-' || peek() == '.' || peek() == '_'))
      ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    std::erase(tok, '_');
    if (tok.empty()) fail("expected a value");
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (*first == '+') ++first;
    if (is_float) {
      double d = 0.0;
      const auto [p, ec] = std::from_chars(first, last, d);
      if (ec != std::errc() || p != last) fail("malformed number '" + tok + "'");
      return d;
    }
    std::int64_t i = 0;
    const auto [p, ec] = std::from_chars(first, last, i);
    if (ec != std::errc() || p != last) fail("malformed value '" + tok + "'");
    return i;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  NameSet defined_tables_;
};

inline nlohmann::json parse_toml_lite(std::string_view text) { return TomlLite(text).parse(); }

}  // namespace lamlab::detail
