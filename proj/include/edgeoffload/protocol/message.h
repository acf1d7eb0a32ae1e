#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "edgeoffload/common/error.h"
#include "edgeoffload/common/json_fields.h"

namespace edgeoffload::protocol {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::uint32_t kMaxBodySize = 16u * 1024u * 1024u;

enum class MessageType {
  kRegister,
  kRegisterAck,
  kHeartbeat,
  kHeartbeatAck,
  kSubmitJob,
  kJobStatus,
  kDispatch,
  kPreempt,
  kCheckpointDone,
  kResume,
  kOffloadRequest,
  kOffloadResponse,
  kError,
};

std::string_view to_string(MessageType type);
std::optional<MessageType> parse_message_type(std::string_view text);

struct Message {
  MessageType type = MessageType::kError;
  std::string id;  // correlation id; a response carries its request's id
  std::int64_t ts_ms = 0;
  Json payload = Json::object();

  bool operator==(const Message&) const = default;
};

// Codes carried in ERROR payloads.
namespace error_code {
inline constexpr std::string_view kBadRequest = "bad_request";
inline constexpr std::string_view kNoCapacity = "no_capacity";
inline constexpr std::string_view kNotLeader = "not_leader";
inline constexpr std::string_view kUnknownWorker = "unknown_worker";
inline constexpr std::string_view kRejected = "rejected";
inline constexpr std::string_view kInternal = "internal";
}  // namespace error_code

class ProtocolError : public Error {
 public:
  enum class Kind { kFraming, kOversize, kParse, kSchema };

  ProtocolError(Kind kind, const std::string& what, std::size_t offset = 0)
      : Error(what), kind_(kind), offset_(offset) {}

  Kind kind() const { return kind_; }
  // Byte offset into the body where parsing failed (kParse only).
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

// Raised by a peer that answered with an ERROR message.
class RemoteError : public Error {
 public:
  RemoteError(std::string code, const std::string& message)
      : Error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

Message make_message(MessageType type, std::string id, Json payload);
Message make_response(const Message& request, MessageType type, Json payload);
Message make_error(const Message& request, std::string_view code, const std::string& message);
// Throws RemoteError when `m` is an ERROR message.
void throw_if_error(const Message& m);

// Checks the fields each message type must carry. Throws ProtocolError(kSchema).
void validate_schema(const Message& m);

std::string encode_body(const Message& m);
// Length-prefixed frame. Throws ProtocolError(kOversize) past kMaxBodySize.
std::string encode(const Message& m);
Message decode_body(std::string_view body);
// Exactly one frame; trailing or missing bytes are framing errors.
Message decode(std::string_view frame);

std::uint32_t read_length_prefix(const unsigned char* header);

// Incremental frame splitter for a byte stream. Once it throws, the stream is
// unusable and the connection should be closed.
class FrameDecoder {
 public:
  void feed(std::string_view bytes);
  // Next complete message, or nullopt when more bytes are needed.
  std::optional<Message> next();
  std::size_t buffered() const { return buffer_.size() - pos_; }

 private:
  std::string buffer_;
  std::size_t pos_ = 0;
};

std::int64_t now_ms();

}  // namespace edgeoffload::protocol
