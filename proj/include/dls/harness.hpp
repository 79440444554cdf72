#pragma once

// Workload generation, the brute-force matching oracle, and single-broker
// false-positive measurement.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "dls/cbf.hpp"
#include "dls/label_space.hpp"

namespace dls {

enum class Distribution { Uniform, Zipf };

std::string_view to_string(Distribution d) noexcept;
Distribution parse_distribution(std::string_view s);

struct WorkloadSpec {
  Distribution distribution = Distribution::Uniform;
  double zipf_s = 1.0;
  std::size_t n_subscriptions = 0;
  std::size_t n_events = 0;
  // Per-dimension maximum interval length; empty means W_i / 8 everywhere.
  std::vector<std::uint64_t> max_interval_len;
  std::uint64_t seed = 1;

  void validate(const ContentSchema& schema) const;
  std::uint64_t interval_len(const ContentSchema& schema, std::size_t dim) const;
};

// mt19937_64 with a portable bounded draw (the standard distributions are
// implementation-defined, which would break cross-platform replay).
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  std::uint64_t next() { return engine_(); }
  // Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  // Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Zipf(s) over ranks 1..n by inverse CDF on the precomputed harmonic
// normalisation.
class ZipfSampler {
 public:
  static constexpr std::uint64_t kMaxRanks = std::uint64_t{1} << 24;

  ZipfSampler(std::uint64_t n, double s);
  std::uint64_t sample(Rng& rng) const;
  double pmf(std::uint64_t rank) const;
  std::uint64_t size() const noexcept { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
  double s_;
};

std::vector<Subscription> gen_subscriptions(const WorkloadSpec& spec, const ContentSchema& schema);
std::vector<EventPoint> gen_events(const WorkloadSpec& spec, const ContentSchema& schema);

// Flat list of normalised predicate rectangles, matched by linear scan.
class OracleIndex {
 public:
  explicit OracleIndex(const ContentSchema& schema);
  OracleIndex(const ContentSchema& schema, std::span<const Subscription> subs);

  // Appends `sub` under `id`; entries are matched in insertion order.
  void add(std::uint32_t id, const Subscription& sub);
  std::size_t size() const noexcept { return ids_.size(); }
  std::uint32_t id(std::size_t slot) const { return ids_[slot]; }
  bool matches(std::size_t slot, const EventPoint& e) const;
  std::vector<std::uint32_t> match(const EventPoint& e) const;

 private:
  const ContentSchema* schema_;
  std::size_t d_;
  bool has_discrete_ = false;
  std::vector<std::uint32_t> ids_;
  std::vector<std::int64_t> lo_;
  std::vector<std::int64_t> hi_;
  std::vector<std::vector<std::int64_t>> sets_;  // per (slot, dim) for discrete dims
};

std::vector<std::uint32_t> oracle_match(const OracleIndex& index, const EventPoint& e);

struct FprOptions {
  // Subscriptions are dealt round-robin to ceil(n / subscriptions_per_client)
  // subscriber clients of one broker; each client's filter aggregates the
  // labels of its subscriptions.
  std::size_t subscriptions_per_client = 8;
  std::uint64_t app_id = 0;
  std::size_t label_cap = kDefaultLabelCap;
};

struct FprReport {
  std::size_t clients = 0;
  std::uint64_t decisions = 0;      // (event, client) pairs
  std::uint64_t negatives = 0;      // pairs the exact oracle rejects
  std::uint64_t deliveries = 0;     // pairs the client filter accepts
  std::uint64_t mapping_fp = 0;     // false delivery, label inside the client's label set
  std::uint64_t cbf_fp = 0;         // false delivery, label outside it
  std::uint64_t false_negatives = 0;
  // Rates are per decision: total_fpr = (mapping_fp + cbf_fp) / decisions.
  double mapping_fpr = 0.0;
  double cbf_fpr = 0.0;
  double total_fpr = 0.0;
};

FprReport measure_fpr(const ContentSchema& schema, std::span<const Subscription> subscriptions,
                      std::span<const EventPoint> events, const CBFParams& params,
                      const FprOptions& options = {});

}  // namespace dls
