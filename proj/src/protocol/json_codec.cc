#include "edgeoffload/protocol/json_codec.h"

#include <cmath>
#include <vector>

#include <rapidjson/error/en.h>
#include <rapidjson/memorystream.h>
#include <rapidjson/reader.h>
#include <rapidjson/stringbuffer.h>
#include <rapidjson/writer.h>

namespace edgeoffload::protocol {

namespace {

using Writer = rapidjson::Writer<rapidjson::StringBuffer>;

void write(const Json& v, Writer& w) {
  switch (v.type()) {
    case Json::value_t::null:
    case Json::value_t::discarded:
      w.Null();
      break;
    case Json::value_t::boolean:
      w.Bool(v.get<bool>());
      break;
    case Json::value_t::number_integer:
      w.Int64(v.get<std::int64_t>());
      break;
    case Json::value_t::number_unsigned:
      w.Uint64(v.get<std::uint64_t>());
      break;
    case Json::value_t::number_float: {
      double d = v.get<double>();
      if (std::isfinite(d)) {
        w.Double(d);
      } else {
        w.Null();
      }
      break;
    }
    case Json::value_t::string: {
      const auto& s = v.get_ref<const std::string&>();
      w.String(s.data(), static_cast<rapidjson::SizeType>(s.size()));
      break;
    }
    case Json::value_t::array:
      w.StartArray();
      for (const auto& x : v) write(x, w);
      w.EndArray();
      break;
    case Json::value_t::object:
      w.StartObject();
      for (auto it = v.begin(); it != v.end(); ++it) {
        w.Key(it.key().data(), static_cast<rapidjson::SizeType>(it.key().size()));
        write(it.value(), w);
      }
      w.EndObject();
      break;
    case Json::value_t::binary:
      throw std::invalid_argument("binary JSON values are not serializable");
  }
}

// Builds an nlohmann value from reader events.
class Builder {
 public:
  bool Null() { return put(Json(nullptr)); }
  bool Bool(bool b) { return put(Json(b)); }
  bool Int(int i) { return put(Json(static_cast<std::int64_t>(i))); }
  bool Uint(unsigned u) { return put(Json(static_cast<std::uint64_t>(u))); }
  bool Int64(std::int64_t i) { return put(Json(i)); }
  bool Uint64(std::uint64_t u) { return put(Json(u)); }
  bool Double(double d) { return put(Json(d)); }
  bool RawNumber(const char*, rapidjson::SizeType, bool) { return false; }
  bool String(const char* s, rapidjson::SizeType n, bool) { return put(Json(std::string(s, n))); }
  bool Key(const char* s, rapidjson::SizeType n, bool) {
    key_.assign(s, n);
    return true;
  }
  bool StartObject() { return open(Json::object()); }
  bool EndObject(rapidjson::SizeType) { return close(); }
  bool StartArray() { return open(Json::array()); }
  bool EndArray(rapidjson::SizeType) { return close(); }

  Json take() { return std::move(root_); }

 private:
  // Where the next value goes: the root, an array slot or an object member.
  Json* slot() {
    if (stack_.empty()) return &root_;
    Json& top = *stack_.back();
    if (top.is_array()) {
      top.push_back(nullptr);
      return &top.back();
    }
    return &top[key_];
  }
  bool put(Json v) {
    *slot() = std::move(v);
    return true;
  }
  bool open(Json container) {
    Json* s = slot();
    *s = std::move(container);
    stack_.push_back(s);
    return true;
  }
  bool close() {
    stack_.pop_back();
    return true;
  }

  Json root_;
  std::vector<Json*> stack_;
  std::string key_;
};

}  // namespace

std::string write_json(const Json& value) {
  rapidjson::StringBuffer buffer;
  Writer writer(buffer);
  write(value, writer);
  return std::string(buffer.GetString(), buffer.GetSize());
}

Json read_json(std::string_view text) {
  constexpr unsigned kFlags = rapidjson::kParseValidateEncodingFlag |
                              rapidjson::kParseFullPrecisionFlag;
  rapidjson::MemoryStream stream(text.data(), text.size());
  rapidjson::Reader reader;
  Builder builder;
  rapidjson::ParseResult ok = reader.Parse<kFlags>(stream, builder);
  if (!ok) {
    throw JsonSyntaxError{ok.Offset(), rapidjson::GetParseError_En(ok.Code())};
  }
  return builder.take();
}

}  // namespace edgeoffload::protocol
