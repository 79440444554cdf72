#include <gtest/gtest.h>

#include "dls/error.hpp"
#include "dls/wire.hpp"

using namespace dls;

TEST(Wire, LabelIsBigEndianFixedWidth) {
  std::vector<std::uint8_t> out;
  write_label(out, RangeLabel{0x0102}, 3);
  EXPECT_EQ(out, (std::vector<std::uint8_t>{0x00, 0x01, 0x02}));
  EXPECT_EQ(read_label(out, 3).bits, 0x0102u);
}

TEST(Wire, SubscribeLayout) {
  const WireMessage msg{MsgKind::Subscribe, {RangeLabel{0x1b}, RangeLabel{0x1a}}};
  const auto bytes = encode_message(msg, 1);
  EXPECT_EQ(bytes, (std::vector<std::uint8_t>{0x01, 0, 0, 0, 2, 0x1b, 0x1a}));
  EXPECT_EQ(decode_message(bytes, 1), msg);
}

TEST(Wire, RoundTripAllKinds) {
  for (auto kind : {MsgKind::Subscribe, MsgKind::Unsubscribe}) {
    LabelSet labels;
    for (std::uint64_t i = 0; i < 300; ++i) labels.push_back(RangeLabel{i * 0x10001});
    const WireMessage msg{kind, labels};
    EXPECT_EQ(decode_message(encode_message(msg, 4), 4), msg);
  }
  const WireMessage pub{MsgKind::Publish, {RangeLabel{0xdeadbeefcafeULL}}};
  const auto bytes = encode_message(pub, 8);
  EXPECT_EQ(bytes.size(), 1u + 4u + 8u);
  EXPECT_EQ(decode_message(bytes, 8), pub);
}

TEST(Wire, Rejections) {
  EXPECT_THROW(encode_message(WireMessage{MsgKind::Publish, {}}, 2), Error);
  EXPECT_THROW(encode_message(WireMessage{MsgKind::Subscribe, {RangeLabel{0x1ff}}}, 1), Error);
  EXPECT_THROW(decode_message(std::vector<std::uint8_t>{0x07, 0, 0, 0, 0}, 1), Error);
  EXPECT_THROW(decode_message(std::vector<std::uint8_t>{0x01, 0, 0, 0, 2, 0x01}, 1), Error);
  EXPECT_THROW(decode_message(std::vector<std::uint8_t>{0x03, 0, 0, 0, 2, 0x01, 0x02}, 1), Error);
  EXPECT_THROW(decode_message(std::vector<std::uint8_t>{0x01, 0, 0}, 1), Error);
}
