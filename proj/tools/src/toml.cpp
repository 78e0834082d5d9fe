#include "toml.hpp"

#include <cctype>
#include <charconv>
#include <string>
#include <vector>

#include "fincon/error.hpp"

namespace fincon::cli {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  nlohmann::ordered_json run() {
    nlohmann::ordered_json root = nlohmann::ordered_json::object();
    nlohmann::ordered_json* table = &root;
    for (;;) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_space();
        std::vector<std::string> path = key_path();
        skip_space();
        expect(']');
        end_of_line();
        table = &root;
        for (const auto& k : path) {
          nlohmann::ordered_json& next = (*table)[k];
          if (next.is_null()) next = nlohmann::ordered_json::object();
          if (!next.is_object()) fail("'" + k + "' is not a table");
          table = &next;
        }
        continue;
      }
      std::vector<std::string> path = key_path();
      skip_space();
      expect('=');
      skip_space();
      nlohmann::ordered_json value = parse_value();
      assign(*table, path, std::move(value));
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("config line " + std::to_string(line_) + ": " + what);
  }
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }
  // Whitespace, comments and newlines (inside arrays, and between statements).
  void skip_blank_lines() {
    for (;;) {
      skip_space();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      return;
    }
  }
  void end_of_line() {
    skip_space();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    ++pos_;
    ++line_;
  }

  std::string key() {
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }
  std::vector<std::string> key_path() {
    std::vector<std::string> path{key()};
    skip_space();
    while (peek() == '.') {
      ++pos_;
      skip_space();
      path.push_back(key());
      skip_space();
    }
    return path;
  }
  void assign(nlohmann::ordered_json& table, const std::vector<std::string>& path, nlohmann::ordered_json value) {
    nlohmann::ordered_json* t = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      nlohmann::ordered_json& next = (*t)[path[i]];
      if (next.is_null()) next = nlohmann::ordered_json::object();
      if (!next.is_object()) fail("'" + path[i] + "' is not a table");
      t = &next;
    }
    if (t->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*t)[path.back()] = std::move(value);
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = text_[pos_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '\\': out += '\\'; break;
        case '"': out += '"'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string literal_string() {
    expect('\'');
    const std::size_t start = pos_;
    while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
    if (peek() != '\'') fail("unterminated string");
    return std::string(text_.substr(start, pos_++ - start));
  }

  nlohmann::ordered_json parse_value() {
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return number();
  }

  nlohmann::ordered_json number() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string tok;
    for (char ch : text_.substr(start, pos_ - start)) {
      if (ch != '_') tok += ch;
    }
    if (tok.empty()) fail("expected a value");
    const char* first = tok.data() + (tok.front() == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    if (tok.find_first_of(".eE") == std::string::npos) {
      std::int64_t v = 0;
      const auto r = std::from_chars(first, last, v);
      if (r.ec == std::errc() && r.ptr == last) return v;
    } else {
      double v = 0.0;
      const auto r = std::from_chars(first, last, v);
      if (r.ec == std::errc() && r.ptr == last) return v;
    }
    fail("invalid value '" + tok + "'");
  }

  nlohmann::ordered_json array() {
    expect('[');
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (;;) {
      skip_blank_lines();
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      out.push_back(parse_value());
      skip_blank_lines();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      skip_blank_lines();
      expect(']');
      return out;
    }
  }

  nlohmann::ordered_json inline_table() {
    expect('{');
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    skip_space();
    if (peek() == '}') {
      ++pos_;
      return out;
    }
    for (;;) {
      skip_space();
      std::vector<std::string> path = key_path();
      skip_space();
      expect('=');
      skip_space();
      assign(out, path, parse_value());
      skip_space();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      return out;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

nlohmann::ordered_json parse_toml(std::string_view text) { return Parser(text).run(); }

}  // namespace fincon::cli
