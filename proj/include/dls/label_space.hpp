#pragma once

// Content-space partitioning: a d-dimensional attribute space is cut into
// g_i = 2^k_i intervals per dimension and every cell of the resulting grid
// gets a range label, the bit concatenation [app_id | idx_1 | ... | idx_d].
// Events map to exactly one label; subscriptions map to the set of labels of
// every cell their predicate rectangle touches.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dls {

enum class DimensionKind { NumericRange, DiscreteSet };

struct DimensionSpec {
  std::string name;
  DimensionKind kind = DimensionKind::NumericRange;
  // Inclusive integer domain. For discrete dimensions these are derived from
  // `values` (min/max) and only informational.
  std::int64_t lower = 0;
  std::int64_t upper = 0;
  // Admissible values of a discrete dimension, in label order.
  std::vector<std::int64_t> values;
  unsigned bits = 1;  // k_i

  static DimensionSpec numeric(std::string name, std::int64_t lower, std::int64_t upper,
                               unsigned bits);
  static DimensionSpec discrete(std::string name, std::vector<std::int64_t> values,
                                unsigned bits);

  std::uint64_t granules() const noexcept { return std::uint64_t{1} << bits; }
  // W_i = u_i - l_i + 1 (for discrete dimensions: the number of values).
  std::uint64_t width() const noexcept;
  bool contains(std::int64_t value) const noexcept;
  // Position of `value` in a discrete dimension's value list.
  std::optional<std::size_t> position(std::int64_t value) const noexcept;

  bool operator==(const DimensionSpec&) const = default;
};

class ContentSchema {
 public:
  ContentSchema() = default;
  // Validates every dimension and the total label width; throws
  // Error(InvalidSchema) on violation.
  ContentSchema(std::vector<DimensionSpec> dims, unsigned app_id_bits = 0);

  // d dimensions, each numeric over [lower, upper] with `bits` bits.
  static ContentSchema uniform(std::size_t d, std::int64_t lower, std::int64_t upper,
                               unsigned bits);

  std::span<const DimensionSpec> dims() const noexcept { return dims_; }
  const DimensionSpec& dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const noexcept { return dims_.size(); }
  unsigned app_id_bits() const noexcept { return app_id_bits_; }
  unsigned label_bits() const noexcept { return label_bits_; }
  // ceil(label_bits / 8): the wire width of one label.
  std::size_t label_bytes() const noexcept { return (label_bits_ + 7) / 8; }
  // N_total = prod g_i, saturating at UINT64_MAX.
  std::uint64_t total_ranges() const noexcept;
  std::optional<std::size_t> find(std::string_view name) const noexcept;

  bool operator==(const ContentSchema&) const = default;

 private:
  std::vector<DimensionSpec> dims_;
  unsigned app_id_bits_ = 0;
  unsigned label_bits_ = 0;
};

enum class ValueType { Integer, Discrete };

// {attr, lowVal, highVal, type}. A missing bound denotes a single-sided
// constraint; discrete predicates carry the chosen value subset instead.
struct Predicate {
  std::string attr;
  std::optional<std::int64_t> low;
  std::optional<std::int64_t> high;
  ValueType type = ValueType::Integer;
  std::vector<std::int64_t> values;

  static Predicate range(std::string attr, std::int64_t low, std::int64_t high);
  static Predicate at_least(std::string attr, std::int64_t low);
  static Predicate at_most(std::string attr, std::int64_t high);
  static Predicate one_of(std::string attr, std::vector<std::int64_t> values);

  bool operator==(const Predicate&) const = default;
};

struct Subscription {
  std::vector<Predicate> predicates;
  bool operator==(const Subscription&) const = default;
};

struct EventPoint {
  std::vector<std::int64_t> values;
  bool operator==(const EventPoint&) const = default;
};

struct RangeLabel {
  std::uint64_t bits = 0;
  auto operator<=>(const RangeLabel&) const = default;
};

using LabelSet = std::vector<RangeLabel>;

struct DecodedLabel {
  std::uint64_t app_id = 0;
  std::vector<std::uint32_t> indices;
  bool operator==(const DecodedLabel&) const = default;
};

inline constexpr std::size_t kDefaultLabelCap = std::size_t{1} << 20;

Predicate normalize_predicate(const Predicate& pred, const DimensionSpec& dim);

std::uint32_t interval_index(const DimensionSpec& dim, std::int64_t value);

RangeLabel encode_label(const ContentSchema& schema, std::uint64_t app_id,
                        std::span<const std::uint32_t> indices);

DecodedLabel decode_label(const ContentSchema& schema, RangeLabel label);

RangeLabel event_to_label(const ContentSchema& schema, std::uint64_t app_id,
                          const EventPoint& event);

// Labels of the minimum bounding rectangle of `sub`, in ascending index
// order (odometer over dims, last dimension fastest). Throws
// LabelSetOverflow when the product of per-dimension spans exceeds `cap`.
LabelSet subscription_to_labels(const ContentSchema& schema, std::uint64_t app_id,
                                const Subscription& sub,
                                std::size_t cap = kDefaultLabelCap);

// Number of labels subscription_to_labels would produce, without building them.
std::uint64_t label_count(const ContentSchema& schema, const Subscription& sub);

// Exact Boolean evaluation of the conjunction against an event.
bool evaluate(const ContentSchema& schema, const Subscription& sub, const EventPoint& event);

// Checks predicate attributes against the schema (known, unique) and
// returns one normalized predicate per schema dimension, full-domain for
// unconstrained dimensions.
std::vector<Predicate> normalize_subscription(const ContentSchema& schema,
                                              const Subscription& sub);

void validate_event(const ContentSchema& schema, const EventPoint& event);

}  // namespace dls

template <>
struct std::hash<dls::RangeLabel> {
  std::size_t operator()(const dls::RangeLabel& l) const noexcept {
    return std::hash<std::uint64_t>{}(l.bits);
  }
};
