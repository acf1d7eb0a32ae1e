#pragma once

#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace edgeoffload {

using Json = nlohmann::json;

// Collects every problem found while reading a document so that the user sees
// all offending fields at once rather than one per run.
class JsonLocator;

class FieldErrors {
 public:
  void add(std::string path, std::string message);
  bool empty() const { return entries_.empty(); }
  const std::vector<std::string>& entries() const { return entries_; }
  // Throws ValidationError listing every entry, prefixed with its source
  // line when a locator is given.
  void throw_if_any(std::string_view what, const JsonLocator* locator = nullptr) const;

 private:
  std::vector<std::string> paths_;
  std::vector<std::string> entries_;
};

// Maps field paths ("jobs[1].required.gpus") to the 1-based line where the
// value starts in the source text. Built from text that already parsed.
class JsonLocator {
 public:
  explicit JsonLocator(std::string_view text);
  // Line of the value at `path`, or of the nearest enclosing value present.
  std::optional<std::size_t> line_of(std::string_view path) const;

 private:
  void value(const std::string& path);
  void skip_ws();
  std::string string_token();

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::map<std::string, std::size_t, std::less<>> lines_;
};

// Typed accessors over one JSON object. Missing or ill-typed fields are
// recorded in the shared FieldErrors and a neutral value is returned, so a
// reader keeps going and reports everything in one pass.
class FieldReader {
 public:
  FieldReader(const Json& object, std::string path, FieldErrors& errors);

  bool ok() const { return is_object_; }
  bool has(std::string_view key) const;
  const std::string& path() const { return path_; }
  std::string child_path(std::string_view key) const;
  FieldErrors& errors() const { return errors_; }

  double number(std::string_view key);
  double number_or(std::string_view key, double fallback);
  std::optional<double> optional_number(std::string_view key);
  long long integer_or(std::string_view key, long long fallback);
  long long integer(std::string_view key);
  std::string string(std::string_view key);
  std::string string_or(std::string_view key, std::string fallback);
  bool boolean_or(std::string_view key, bool fallback);
  std::set<std::string> string_set_or_empty(std::string_view key);
  // Returns nullptr (and records an error unless optional) when absent or of
  // the wrong type.
  const Json* object(std::string_view key, bool optional = false);
  const Json* array(std::string_view key, bool optional = false);

  void reject_unknown(std::initializer_list<std::string_view> known);

 private:
  const Json* find(std::string_view key) const;

  const Json& object_;
  std::string path_;
  FieldErrors& errors_;
  bool is_object_;
};

// Parses JSON text; syntax errors become ParseError with 1-based line and
// column computed from the parser's byte offset.
Json parse_json_text(std::string_view text, std::string_view source_name);

// Reads a whole file; throws Error if it cannot be opened.
std::string read_text_file(const std::string& path);

}  // namespace edgeoffload
