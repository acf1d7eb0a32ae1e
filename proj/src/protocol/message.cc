#include "edgeoffload/protocol/message.h"

#include <array>
#include <chrono>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "edgeoffload/protocol/json_codec.h"

namespace edgeoffload::protocol {

namespace {

struct TypeInfo {
  MessageType type;
  std::string_view name;
  // Payload fields every message of this type must carry, with their JSON kind.
  std::vector<std::pair<std::string_view, Json::value_t>> required;
};

constexpr auto kString = Json::value_t::string;
constexpr auto kObject = Json::value_t::object;
constexpr auto kBool = Json::value_t::boolean;

const std::array<TypeInfo, 13>& type_table() {
  static const std::array<TypeInfo, 13> table = {{
      {MessageType::kRegister, "REGISTER", {{"worker", kObject}}},
      {MessageType::kRegisterAck, "REGISTER_ACK", {{"worker_id", kString}}},
      {MessageType::kHeartbeat, "HEARTBEAT", {{"worker_id", kString}}},
      {MessageType::kHeartbeatAck, "HEARTBEAT_ACK", {{"reregister", kBool}}},
      {MessageType::kSubmitJob, "SUBMIT_JOB", {{"job", kObject}}},
      {MessageType::kJobStatus, "JOB_STATUS", {{"job_id", kString}, {"status", kString}}},
      {MessageType::kDispatch, "DISPATCH", {{"job", kObject}}},
      {MessageType::kPreempt, "PREEMPT", {{"job_id", kString}}},
      {MessageType::kCheckpointDone, "CHECKPOINT_DONE", {{"job_id", kString}}},
      {MessageType::kResume, "RESUME", {{"job", kObject}, {"checkpoint", kObject}}},
      {MessageType::kOffloadRequest, "OFFLOAD_REQUEST", {{"model", kString}, {"data", kString}}},
      {MessageType::kOffloadResponse, "OFFLOAD_RESPONSE", {{"digest", kString}}},
      {MessageType::kError, "ERROR", {{"code", kString}, {"message", kString}}},
  }};
  return table;
}

const TypeInfo& info(MessageType type) { return type_table().at(static_cast<std::size_t>(type)); }

bool kind_matches(const Json& value, Json::value_t want) {
  return value.type() == want;
}

[[noreturn]] void schema_error(const std::string& what) {
  throw ProtocolError(ProtocolError::Kind::kSchema, what);
}

}  // namespace

std::string_view to_string(MessageType type) { return info(type).name; }

std::optional<MessageType> parse_message_type(std::string_view text) {
  for (const auto& t : type_table()) {
    if (t.name == text) return t.type;
  }
  return std::nullopt;
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

Message make_message(MessageType type, std::string id, Json payload) {
  return Message{type, std::move(id), now_ms(), std::move(payload)};
}

Message make_response(const Message& request, MessageType type, Json payload) {
  return make_message(type, request.id, std::move(payload));
}

Message make_error(const Message& request, std::string_view code, const std::string& message) {
  return make_response(request, MessageType::kError,
                       Json{{"code", std::string(code)}, {"message", message}});
}

void throw_if_error(const Message& m) {
  if (m.type != MessageType::kError) return;
  throw RemoteError(m.payload.value("code", std::string(error_code::kInternal)),
                    m.payload.value("message", std::string("unspecified error")));
}

void validate_schema(const Message& m) {
  if (m.id.empty()) schema_error("message id must not be empty");
  if (!m.payload.is_object()) {
    schema_error(fmt::format("{} payload must be an object", to_string(m.type)));
  }
  for (const auto& [key, kind] : info(m.type).required) {
    auto it = m.payload.find(std::string(key));
    if (it == m.payload.end()) {
      schema_error(fmt::format("{} payload is missing '{}'", to_string(m.type), key));
    }
    if (!kind_matches(*it, kind)) {
      schema_error(fmt::format("{} payload field '{}' has the wrong type", to_string(m.type), key));
    }
  }
}

std::string encode_body(const Message& m) {
  validate_schema(m);
  Json body{{"v", kProtocolVersion},
            {"type", std::string(to_string(m.type))},
            {"id", m.id},
            {"ts_ms", m.ts_ms},
            {"payload", m.payload}};
  return write_json(body);
}

std::string encode(const Message& m) {
  std::string body = encode_body(m);
  if (body.size() > kMaxBodySize) {
    throw ProtocolError(ProtocolError::Kind::kOversize,
                        fmt::format("message body of {} bytes exceeds {}", body.size(),
                                    kMaxBodySize));
  }
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string frame;
  frame.reserve(kHeaderSize + body.size());
  frame.push_back(static_cast<char>((n >> 24) & 0xff));
  frame.push_back(static_cast<char>((n >> 16) & 0xff));
  frame.push_back(static_cast<char>((n >> 8) & 0xff));
  frame.push_back(static_cast<char>(n & 0xff));
  frame += body;
  return frame;
}

Message decode_body(std::string_view body) {
  Json j;
  try {
    j = read_json(body);
  } catch (const JsonSyntaxError& e) {
    throw ProtocolError(ProtocolError::Kind::kParse,
                        fmt::format("malformed message body at byte {}: {}", e.offset, e.message),
                        e.offset);
  }
  if (!j.is_object()) schema_error("message body must be an object");
  auto field = [&](const char* key) -> const Json& {
    auto it = j.find(key);
    if (it == j.end()) schema_error(fmt::format("message is missing '{}'", key));
    return *it;
  };
  const Json& v = field("v");
  if (!v.is_number_integer() || v.get<std::int64_t>() != kProtocolVersion) {
    schema_error(fmt::format("unsupported protocol version {}", v.dump()));
  }
  const Json& type = field("type");
  if (!type.is_string()) schema_error("message type must be a string");
  auto parsed = parse_message_type(type.get<std::string>());
  if (!parsed) schema_error(fmt::format("unknown message type '{}'", type.get<std::string>()));
  const Json& id = field("id");
  if (!id.is_string()) schema_error("message id must be a string");
  const Json& ts = field("ts_ms");
  if (!ts.is_number_integer()) schema_error("ts_ms must be an integer");
  if (j.size() != 5) schema_error("message has unexpected top-level fields");

  Message m{*parsed, id.get<std::string>(), ts.get<std::int64_t>(), field("payload")};
  validate_schema(m);
  return m;
}

std::uint32_t read_length_prefix(const unsigned char* header) {
  return (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
         (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
}

Message decode(std::string_view frame) {
  if (frame.size() < kHeaderSize) {
    throw ProtocolError(ProtocolError::Kind::kFraming,
                        fmt::format("truncated header: {} of 4 bytes", frame.size()));
  }
  std::uint32_t n = read_length_prefix(reinterpret_cast<const unsigned char*>(frame.data()));
  if (n > kMaxBodySize) {
    throw ProtocolError(ProtocolError::Kind::kOversize,
                        fmt::format("declared length {} exceeds {}", n, kMaxBodySize));
  }
  if (frame.size() - kHeaderSize != n) {
    throw ProtocolError(ProtocolError::Kind::kFraming,
                        fmt::format("frame declares {} body bytes but carries {}", n,
                                    frame.size() - kHeaderSize));
  }
  return decode_body(frame.substr(kHeaderSize));
}

void FrameDecoder::feed(std::string_view bytes) {
  if (pos_ > 0 && pos_ == buffer_.size()) {
    buffer_.clear();
    pos_ = 0;
  } else if (pos_ > (1u << 20) && pos_ > buffer_.size() / 2) {
    buffer_.erase(0, pos_);
    pos_ = 0;
  }
  buffer_.append(bytes);
}

std::optional<Message> FrameDecoder::next() {
  if (buffered() < kHeaderSize) return std::nullopt;
  std::uint32_t n =
      read_length_prefix(reinterpret_cast<const unsigned char*>(buffer_.data() + pos_));
  if (n > kMaxBodySize) {
    throw ProtocolError(ProtocolError::Kind::kOversize,
                        fmt::format("declared length {} exceeds {}", n, kMaxBodySize));
  }
  if (buffered() - kHeaderSize < n) return std::nullopt;
  std::string_view body(buffer_.data() + pos_ + kHeaderSize, n);
  pos_ += kHeaderSize + n;
  return decode_body(body);
}

}  // namespace edgeoffload::protocol
