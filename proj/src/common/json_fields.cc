#include "edgeoffload/common/json_fields.h"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "edgeoffload/common/error.h"

namespace edgeoffload {

void FieldErrors::add(std::string path, std::string message) {
  entries_.push_back(fmt::format("{}: {}", path, message));
  paths_.push_back(std::move(path));
}

void FieldErrors::throw_if_any(std::string_view what, const JsonLocator* locator) const {
  if (entries_.empty()) return;
  std::string text = fmt::format("invalid {} ({} problem{}):", what, entries_.size(),
                                 entries_.size() == 1 ? "" : "s");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    text += "\n  ";
    if (locator != nullptr) {
      if (auto line = locator->line_of(paths_[i])) text += fmt::format("line {}: ", *line);
    }
    text += entries_[i];
  }
  throw ValidationError(text);
}

JsonLocator::JsonLocator(std::string_view text) : text_(text) {
  skip_ws();
  if (pos_ < text_.size()) value("");
}

std::optional<std::size_t> JsonLocator::line_of(std::string_view path) const {
  std::string p(path);
  for (;;) {
    auto it = lines_.find(p);
    if (it != lines_.end()) return it->second;
    auto cut = p.find_last_of(".[");
    if (cut == std::string::npos) break;
    p.resize(cut);
  }
  auto root = lines_.find("");
  if (root != lines_.end()) return root->second;
  return std::nullopt;
}

void JsonLocator::skip_ws() {
  while (pos_ < text_.size()) {
    char c = text_[pos_];
    if (c == '\n') {
      ++line_;
    } else if (c != ' ' && c != '\t' && c != '\r') {
      return;
    }
    ++pos_;
  }
}

std::string JsonLocator::string_token() {
  std::string out;
  ++pos_;  // opening quote
  while (pos_ < text_.size() && text_[pos_] != '"') {
    if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
      out += text_[pos_];
      ++pos_;
    }
    out += text_[pos_];
    ++pos_;
  }
  ++pos_;  // closing quote
  return out;
}

void JsonLocator::value(const std::string& path) {
  lines_.emplace(path, line_);
  if (pos_ >= text_.size()) return;
  char c = text_[pos_];
  if (c == '{') {
    ++pos_;
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) return;
      if (text_[pos_] == '}') {
        ++pos_;
        return;
      }
      if (text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (text_[pos_] != '"') return;
      std::string key = string_token();
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ':') ++pos_;
      skip_ws();
      value(path.empty() ? key : path + "." + key);
    }
  }
  if (c == '[') {
    ++pos_;
    std::size_t index = 0;
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) return;
      if (text_[pos_] == ']') {
        ++pos_;
        return;
      }
      if (text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      value(fmt::format("{}[{}]", path, index++));
    }
  }
  if (c == '"') {
    string_token();
    return;
  }
  while (pos_ < text_.size()) {
    char d = text_[pos_];
    if (d == ',' || d == '}' || d == ']' || d == ' ' || d == '\n' || d == '\t' || d == '\r') {
      return;
    }
    ++pos_;
  }
}

FieldReader::FieldReader(const Json& object, std::string path, FieldErrors& errors)
    : object_(object), path_(std::move(path)), errors_(errors),
      is_object_(object.is_object()) {
  if (!is_object_) errors_.add(path_, "expected an object");
}

bool FieldReader::has(std::string_view key) const { return find(key) != nullptr; }

std::string FieldReader::child_path(std::string_view key) const {
  return path_.empty() ? std::string(key) : fmt::format("{}.{}", path_, key);
}

const Json* FieldReader::find(std::string_view key) const {
  if (!is_object_) return nullptr;
  auto it = object_.find(std::string(key));
  if (it == object_.end() || it->is_null()) return nullptr;
  return &*it;
}

double FieldReader::number(std::string_view key) {
  const Json* v = find(key);
  if (v == nullptr) {
    if (is_object_) errors_.add(child_path(key), "required number is missing");
    return 0.0;
  }
  if (!v->is_number()) {
    errors_.add(child_path(key), "expected a number");
    return 0.0;
  }
  return v->get<double>();
}

double FieldReader::number_or(std::string_view key, double fallback) {
  return has(key) ? number(key) : fallback;
}

std::optional<double> FieldReader::optional_number(std::string_view key) {
  if (!has(key)) return std::nullopt;
  return number(key);
}

long long FieldReader::integer(std::string_view key) {
  const Json* v = find(key);
  if (v == nullptr) {
    if (is_object_) errors_.add(child_path(key), "required integer is missing");
    return 0;
  }
  if (!v->is_number_integer()) {
    errors_.add(child_path(key), "expected an integer");
    return 0;
  }
  return v->get<long long>();
}

long long FieldReader::integer_or(std::string_view key, long long fallback) {
  return has(key) ? integer(key) : fallback;
}

std::string FieldReader::string(std::string_view key) {
  const Json* v = find(key);
  if (v == nullptr) {
    if (is_object_) errors_.add(child_path(key), "required string is missing");
    return {};
  }
  if (!v->is_string()) {
    errors_.add(child_path(key), "expected a string");
    return {};
  }
  return v->get<std::string>();
}

std::string FieldReader::string_or(std::string_view key, std::string fallback) {
  return has(key) ? string(key) : std::move(fallback);
}

bool FieldReader::boolean_or(std::string_view key, bool fallback) {
  const Json* v = find(key);
  if (v == nullptr) return fallback;
  if (!v->is_boolean()) {
    errors_.add(child_path(key), "expected true or false");
    return fallback;
  }
  return v->get<bool>();
}

std::set<std::string> FieldReader::string_set_or_empty(std::string_view key) {
  std::set<std::string> out;
  const Json* v = find(key);
  if (v == nullptr) return out;
  if (!v->is_array()) {
    errors_.add(child_path(key), "expected an array of strings");
    return out;
  }
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_string()) {
      errors_.add(fmt::format("{}[{}]", child_path(key), i), "expected a string");
      continue;
    }
    out.insert((*v)[i].get<std::string>());
  }
  return out;
}

const Json* FieldReader::object(std::string_view key, bool optional) {
  const Json* v = find(key);
  if (v == nullptr) {
    if (!optional && is_object_) errors_.add(child_path(key), "required object is missing");
    return nullptr;
  }
  if (!v->is_object()) {
    errors_.add(child_path(key), "expected an object");
    return nullptr;
  }
  return v;
}

const Json* FieldReader::array(std::string_view key, bool optional) {
  const Json* v = find(key);
  if (v == nullptr) {
    if (!optional && is_object_) errors_.add(child_path(key), "required array is missing");
    return nullptr;
  }
  if (!v->is_array()) {
    errors_.add(child_path(key), "expected an array");
    return nullptr;
  }
  return v;
}

void FieldReader::reject_unknown(std::initializer_list<std::string_view> known) {
  if (!is_object_) return;
  for (auto it = object_.begin(); it != object_.end(); ++it) {
    bool found = false;
    for (auto k : known) {
      if (it.key() == k) {
        found = true;
        break;
      }
    }
    if (!found) errors_.add(child_path(it.key()), "unknown field");
  }
}

Json parse_json_text(std::string_view text, std::string_view source_name) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    // e.byte is 1-based and points one past the offending character.
    std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    if (offset > text.size()) offset = text.size();
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(fmt::format("{}:{}:{}: {}", source_name, line, column, e.what()),
                     line, column);
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace edgeoffload
