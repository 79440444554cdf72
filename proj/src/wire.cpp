#include "dls/wire.hpp"

#include <string>

#include "dls/error.hpp"

namespace dls {

namespace {

void check_width(std::size_t width) {
  if (width < 1 || width > 8) throw Error(ErrorCode::InvalidArgument, "label width must be 1..8");
}

}  // namespace

void write_label(std::vector<std::uint8_t>& out, RangeLabel label, std::size_t width) {
  check_width(width);
  if (width < 8 && (label.bits >> (8 * width)) != 0) {
    throw Error(ErrorCode::MalformedLabel, "label does not fit in " + std::to_string(width) +
                                               " bytes");
  }
  for (std::size_t i = width; i-- > 0;) out.push_back(static_cast<std::uint8_t>(label.bits >> (8 * i)));
}

RangeLabel read_label(std::span<const std::uint8_t> bytes, std::size_t width) {
  check_width(width);
  if (bytes.size() < width) throw Error(ErrorCode::ParseError, "truncated label");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) v = (v << 8) | bytes[i];
  return RangeLabel{v};
}

std::vector<std::uint8_t> encode_message(const WireMessage& msg, std::size_t label_width) {
  if (msg.kind == MsgKind::Publish && msg.labels.size() != 1) {
    throw Error(ErrorCode::InvalidArgument, "publish carries exactly one label");
  }
  if (msg.labels.size() > 0xffffffffULL) {
    throw Error(ErrorCode::InvalidArgument, "too many labels for one message");
  }
  std::vector<std::uint8_t> out;
  out.reserve(5 + msg.labels.size() * label_width);
  out.push_back(static_cast<std::uint8_t>(msg.kind));
  const auto n = static_cast<std::uint32_t>(msg.labels.size());
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  for (auto l : msg.labels) write_label(out, l, label_width);
  return out;
}

WireMessage decode_message(std::span<const std::uint8_t> bytes, std::size_t label_width) {
  check_width(label_width);
  if (bytes.size() < 5) throw Error(ErrorCode::ParseError, "truncated message header");
  WireMessage msg;
  switch (bytes[0]) {
    case 0x01: msg.kind = MsgKind::Subscribe; break;
    case 0x02: msg.kind = MsgKind::Unsubscribe; break;
    case 0x03: msg.kind = MsgKind::Publish; break;
    default: throw Error(ErrorCode::ParseError, "unknown message kind " + std::to_string(bytes[0]));
  }
  std::uint32_t n = 0;
  for (int i = 1; i <= 4; ++i) n = (n << 8) | bytes[i];
  if (bytes.size() != 5 + std::size_t{n} * label_width) {
    throw Error(ErrorCode::ParseError, "message length does not match its label count");
  }
  if (msg.kind == MsgKind::Publish && n != 1) {
    throw Error(ErrorCode::ParseError, "publish carries exactly one label");
  }
  msg.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    msg.labels.push_back(read_label(bytes.subspan(5 + i * label_width), label_width));
  }
  return msg;
}

}  // namespace dls
