#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dls/label_space.hpp"

namespace dls {

enum class MsgKind : std::uint8_t { Subscribe = 0x01, Unsubscribe = 0x02, Publish = 0x03 };

// A label on the wire: big-endian, `width` bytes (ceil(label_bits / 8)).
void write_label(std::vector<std::uint8_t>& out, RangeLabel label, std::size_t width);
RangeLabel read_label(std::span<const std::uint8_t> bytes, std::size_t width);

struct WireMessage {
  MsgKind kind = MsgKind::Subscribe;
  LabelSet labels;
  bool operator==(const WireMessage&) const = default;
};

// 1-byte kind, 4-byte big-endian label count, then `count` fixed-width labels.
// Publish messages carry exactly one label.
std::vector<std::uint8_t> encode_message(const WireMessage& msg, std::size_t label_width);
WireMessage decode_message(std::span<const std::uint8_t> bytes, std::size_t label_width);

}  // namespace dls
