#include "dls/cbf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dls/error.hpp"

namespace dls {

namespace {

constexpr std::uint64_t fmix64(std::uint64_t k) noexcept {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | in[offset + i];
  return v;
}

}  // namespace

void CBFParams::validate() const {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
  if (k_hash < 1 || k_hash > PositionList::kMax) {
    throw Error(ErrorCode::InvalidArgument, "k_hash must be in [1, 16]");
  }
  if (counter_bits < 2 || counter_bits > 16) {
    throw Error(ErrorCode::InvalidArgument, "counter_bits must be in [2, 16]");
  }
}

std::uint32_t default_hash_count(std::uint64_t m, std::uint64_t n_expected) {
  if (n_expected == 0) return 1;
  const double k = std::round(static_cast<double>(m) / static_cast<double>(n_expected) *
                              std::log(2.0));
  return static_cast<std::uint32_t>(std::clamp(k, 1.0, 16.0));
}

std::uint64_t label_hash(std::uint64_t value, std::uint64_t seed) noexcept {
  return fmix64(fmix64(value ^ (seed * 0x9e3779b97f4a7c15ULL)) + seed);
}

PositionList positions(const CBFParams& params, RangeLabel label) noexcept {
  PositionList out;
  const std::uint64_t m = params.m;
  const std::uint64_t h1 = label_hash(label.bits, params.seed_a) % m;
  const std::uint64_t h2 = label_hash(label.bits, params.seed_b) % m;
  // Both terms are < 2^32, so the running sum cannot overflow.
  std::uint64_t idx = h1;
  out.size_ = params.k_hash;
  for (std::uint32_t i = 0; i < params.k_hash; ++i) {
    out.data_[i] = static_cast<std::uint32_t>(idx);
    idx = (idx + h2) % m;
  }
  return out;
}

CountingBloomFilter::CountingBloomFilter(const CBFParams& params) : params_(params) {
  params_.validate();
  const std::uint64_t bits = std::uint64_t{params_.m} * params_.counter_bits;
  // One spare word so a counter straddling the last boundary can be read
  // with two loads.
  words_.assign(bits / 64 + 2, 0);
}

std::uint32_t CountingBloomFilter::counter(std::size_t i) const noexcept {
  const std::uint64_t b = params_.counter_bits;
  const std::uint64_t off = i * b;
  const std::size_t w = off >> 6;
  const unsigned s = off & 63;
  std::uint64_t v = words_[w] >> s;
  if (s + b > 64) v |= words_[w + 1] << (64 - s);
  return static_cast<std::uint32_t>(v & ((std::uint64_t{1} << b) - 1));
}

void CountingBloomFilter::set_counter(std::size_t i, std::uint32_t value) noexcept {
  const std::uint64_t b = params_.counter_bits;
  const std::uint64_t mask = (std::uint64_t{1} << b) - 1;
  const std::uint64_t off = i * b;
  const std::size_t w = off >> 6;
  const unsigned s = off & 63;
  words_[w] = (words_[w] & ~(mask << s)) | (std::uint64_t{value} << s);
  if (s + b > 64) {
    const unsigned spill = 64 - s;
    words_[w + 1] = (words_[w + 1] & ~(mask >> spill)) | (std::uint64_t{value} >> spill);
  }
}

void CountingBloomFilter::add(RangeLabel label) {
  const auto max = params_.max_count();
  for (auto p : positions(params_, label)) {
    const auto c = counter(p);
    if (c >= max) {
      ++saturation_events_;
      continue;
    }
    set_counter(p, c + 1);
    if (c + 1 == max) ++saturation_events_;
  }
  ++n_inserted_;
}

void CountingBloomFilter::remove(RangeLabel label) {
  const auto max = params_.max_count();
  for (auto p : positions(params_, label)) {
    const auto c = counter(p);
    if (c == 0) {
      ++underflow_events_;
    } else if (c < max) {
      set_counter(p, c - 1);
    }
  }
  --n_inserted_;
}

std::uint32_t CountingBloomFilter::query(RangeLabel label) const noexcept {
  std::uint32_t lo = params_.max_count();
  for (auto p : positions(params_, label)) {
    lo = std::min(lo, counter(p));
  }
  return lo;
}

std::uint64_t CountingBloomFilter::counter_sum() const noexcept {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < params_.m; ++i) sum += counter(i);
  return sum;
}

std::vector<std::uint32_t> CountingBloomFilter::nonzero_positions() const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < params_.m; ++i) {
    if (counter(i) != 0) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

bool CountingBloomFilter::empty() const noexcept {
  return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

void CountingBloomFilter::clear() noexcept {
  std::fill(words_.begin(), words_.end(), 0);
  n_inserted_ = 0;
  saturation_events_ = 0;
  underflow_events_ = 0;
}

std::vector<std::uint8_t> encode_params_header(const CBFParams& params) {
  std::vector<std::uint8_t> out;
  out.reserve(kParamsHeaderBytes);
  put_be(out, params.m, 4);
  put_be(out, params.k_hash, 2);
  put_be(out, params.counter_bits, 2);
  put_be(out, params.seed_a, 8);
  put_be(out, params.seed_b, 8);
  return out;
}

CBFParams decode_params_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kParamsHeaderBytes) {
    throw Error(ErrorCode::ParseError, "truncated CBF params header");
  }
  CBFParams p;
  p.m = static_cast<std::uint32_t>(get_be(bytes, 0, 4));
  p.k_hash = static_cast<std::uint32_t>(get_be(bytes, 4, 2));
  p.counter_bits = static_cast<std::uint32_t>(get_be(bytes, 6, 2));
  p.seed_a = get_be(bytes, 8, 8);
  p.seed_b = get_be(bytes, 16, 8);
  p.validate();
  return p;
}

// Counters are packed as a big-endian bit stream: counter 0 occupies the
// most significant bits of the first byte; the final byte is zero-padded.
std::vector<std::uint8_t> CountingBloomFilter::serialize() const {
  auto out = encode_params_header(params_);
  const std::uint64_t total_bits = std::uint64_t{params_.m} * params_.counter_bits;
  out.resize(kParamsHeaderBytes + (total_bits + 7) / 8, 0);
  std::uint64_t bitpos = 0;
  for (std::size_t i = 0; i < params_.m; ++i) {
    const auto c = counter(i);
    for (int b = static_cast<int>(params_.counter_bits) - 1; b >= 0; --b, ++bitpos) {
      if ((c >> b) & 1u) {
        out[kParamsHeaderBytes + bitpos / 8] |= static_cast<std::uint8_t>(0x80u >> (bitpos % 8));
      }
    }
  }
  return out;
}

CountingBloomFilter CountingBloomFilter::deserialize(std::span<const std::uint8_t> bytes) {
  CountingBloomFilter f(decode_params_header(bytes));
  const std::uint64_t total_bits = std::uint64_t{f.params_.m} * f.params_.counter_bits;
  if (bytes.size() != kParamsHeaderBytes + (total_bits + 7) / 8) {
    throw Error(ErrorCode::ParseError, "CBF snapshot size does not match its header");
  }
  std::uint64_t bitpos = 0;
  for (std::size_t i = 0; i < f.params_.m; ++i) {
    std::uint32_t c = 0;
    for (std::uint32_t b = 0; b < f.params_.counter_bits; ++b, ++bitpos) {
      c = (c << 1) | ((bytes[kParamsHeaderBytes + bitpos / 8] >> (7 - bitpos % 8)) & 1u);
    }
    f.set_counter(i, c);
  }
  for (std::uint64_t pad = bitpos; pad % 8 != 0; ++pad) {
    if ((bytes[kParamsHeaderBytes + pad / 8] >> (7 - pad % 8)) & 1u) {
      throw Error(ErrorCode::ParseError, "nonzero padding in CBF snapshot");
    }
  }
  return f;
}

namespace {

void check_fpr_domain(std::int64_t m, std::int64_t n, std::int64_t k) {
  if (m <= 0) throw Error(ErrorCode::DomainError, "m must be positive");
  if (k <= 0) throw Error(ErrorCode::DomainError, "k_hash must be positive");
  if (n < 0) throw Error(ErrorCode::DomainError, "n must be non-negative");
}

}  // namespace

double theoretical_fpr_exact(std::int64_t m, std::int64_t n, std::int64_t k_hash) {
  check_fpr_domain(m, n, k_hash);
  if (n == 0) return 0.0;
  if (m == 1) return 1.0;
  const double kn = static_cast<double>(k_hash) * static_cast<double>(n);
  // 1 - (1 - 1/m)^(kn) computed as -expm1(kn * log1p(-1/m)).
  const double set_prob = -std::expm1(kn * std::log1p(-1.0 / static_cast<double>(m)));
  return std::pow(set_prob, static_cast<double>(k_hash));
}

double theoretical_fpr_approx(std::int64_t m, std::int64_t n, std::int64_t k_hash) {
  check_fpr_domain(m, n, k_hash);
  if (n == 0) return 0.0;
  const double set_prob = -std::expm1(-static_cast<double>(k_hash) * static_cast<double>(n) /
                                      static_cast<double>(m));
  return std::pow(set_prob, static_cast<double>(k_hash));
}

}  // namespace dls
