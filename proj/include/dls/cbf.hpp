#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dls/label_space.hpp"

namespace dls {

struct CBFParams {
  std::uint32_t m = 1024;          // counter count
  std::uint32_t k_hash = 4;        // k_h
  std::uint32_t counter_bits = 4;
  std::uint64_t seed_a = 0x5d1e5eedULL;
  std::uint64_t seed_b = 0xc0ffee11ULL;

  // Throws Error(InvalidArgument) unless m >= 1, 1 <= k_hash <= 16,
  // 2 <= counter_bits <= 16.
  void validate() const;
  std::uint32_t max_count() const noexcept { return (1u << counter_bits) - 1; }

  bool operator==(const CBFParams&) const = default;
};

// round(m / n_expected * ln 2), clamped to [1, 16].
std::uint32_t default_hash_count(std::uint64_t m, std::uint64_t n_expected);

// Seeded 64-bit hash of a label value.
std::uint64_t label_hash(std::uint64_t value, std::uint64_t seed) noexcept;

class PositionList {
 public:
  static constexpr std::size_t kMax = 16;

  std::size_t size() const noexcept { return size_; }
  std::uint32_t operator[](std::size_t i) const noexcept { return data_[i]; }
  const std::uint32_t* begin() const noexcept { return data_.data(); }
  const std::uint32_t* end() const noexcept { return data_.data() + size_; }

 private:
  friend PositionList positions(const CBFParams&, RangeLabel) noexcept;
  std::array<std::uint32_t, kMax> data_{};
  std::size_t size_ = 0;
};

// index_i = (h1 + i * h2) mod m for i in [0, k_hash).
PositionList positions(const CBFParams& params, RangeLabel label) noexcept;

// Counting Bloom filter with packed saturating counters.
//
// A counter that reaches the maximum value is sticky: it is never
// decremented again, and the increment that got it there is counted as a
// saturation event. Decrementing a zero counter leaves it at zero and counts
// an underflow event. Under those rules query() never under-reports the
// multiplicity of a label whose deletes were all matched by earlier adds.
class CountingBloomFilter {
 public:
  explicit CountingBloomFilter(const CBFParams& params);

  const CBFParams& params() const noexcept { return params_; }

  void add(RangeLabel label);
  void remove(RangeLabel label);
  // Minimum over the label's counters.
  std::uint32_t query(RangeLabel label) const noexcept;
  bool contains(RangeLabel label) const noexcept { return query(label) > 0; }

  std::uint32_t counter(std::size_t i) const noexcept;
  std::uint64_t counter_sum() const noexcept;
  std::vector<std::uint32_t> nonzero_positions() const;
  bool empty() const noexcept;
  void clear() noexcept;

  // Adds minus removes.
  std::int64_t n_inserted() const noexcept { return n_inserted_; }
  std::uint64_t saturation_events() const noexcept { return saturation_events_; }
  std::uint64_t underflow_events() const noexcept { return underflow_events_; }

  // Params header followed by the packed counter array. Event counters and
  // n_inserted are not part of the snapshot.
  std::vector<std::uint8_t> serialize() const;
  static CountingBloomFilter deserialize(std::span<const std::uint8_t> bytes);

 private:
  void set_counter(std::size_t i, std::uint32_t value) noexcept;

  CBFParams params_;
  std::vector<std::uint64_t> words_;
  std::int64_t n_inserted_ = 0;
  std::uint64_t saturation_events_ = 0;
  std::uint64_t underflow_events_ = 0;
};

// Fixed-width big-endian header: m (u32), k_hash (u16), counter_bits (u16),
// seed_a (u64), seed_b (u64).
inline constexpr std::size_t kParamsHeaderBytes = 24;
std::vector<std::uint8_t> encode_params_header(const CBFParams& params);
CBFParams decode_params_header(std::span<const std::uint8_t> bytes);

// p = (1 - (1 - 1/m)^(k n))^k
double theoretical_fpr_exact(std::int64_t m, std::int64_t n, std::int64_t k_hash);
// p = (1 - e^(-k n / m))^k
double theoretical_fpr_approx(std::int64_t m, std::int64_t n, std::int64_t k_hash);

}  // namespace dls
