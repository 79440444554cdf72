#include "dls/label_space.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "dls/error.hpp"

namespace dls {

namespace {

using u128 = unsigned __int128;

std::string dim_context(const DimensionSpec& dim) { return "dimension '" + dim.name + "'"; }

void validate_dimension(const DimensionSpec& dim) {
  if (dim.name.empty()) throw Error(ErrorCode::InvalidSchema, "dimension without a name");
  if (dim.bits < 1 || dim.bits > 32) {
    throw Error(ErrorCode::InvalidSchema, dim_context(dim) + ": bits must be in [1, 32]");
  }
  if (dim.kind == DimensionKind::NumericRange) {
    if (dim.upper < dim.lower) {
      throw Error(ErrorCode::InvalidSchema, dim_context(dim) + ": upper < lower");
    }
    if (static_cast<std::uint64_t>(dim.upper) - static_cast<std::uint64_t>(dim.lower) ==
        std::numeric_limits<std::uint64_t>::max()) {
      throw Error(ErrorCode::InvalidSchema, dim_context(dim) + ": domain too wide");
    }
    if (dim.width() < dim.granules()) {
      throw Error(ErrorCode::InvalidSchema,
                  dim_context(dim) + ": domain width smaller than granule count");
    }
    return;
  }
  if (dim.values.empty()) {
    throw Error(ErrorCode::InvalidSchema, dim_context(dim) + ": empty value list");
  }
  if (dim.values.size() > dim.granules()) {
    throw Error(ErrorCode::InvalidSchema,
                dim_context(dim) + ": more discrete values than granules");
  }
  std::unordered_set<std::int64_t> seen;
  for (auto v : dim.values) {
    if (!seen.insert(v).second) {
      throw Error(ErrorCode::InvalidSchema, dim_context(dim) + ": duplicate discrete value");
    }
  }
}

}  // namespace

DimensionSpec DimensionSpec::numeric(std::string name, std::int64_t lower, std::int64_t upper,
                                     unsigned bits) {
  DimensionSpec d;
  d.name = std::move(name);
  d.kind = DimensionKind::NumericRange;
  d.lower = lower;
  d.upper = upper;
  d.bits = bits;
  return d;
}

DimensionSpec DimensionSpec::discrete(std::string name, std::vector<std::int64_t> values,
                                      unsigned bits) {
  DimensionSpec d;
  d.name = std::move(name);
  d.kind = DimensionKind::DiscreteSet;
  if (!values.empty()) {
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    d.lower = *lo;
    d.upper = *hi;
  }
  d.values = std::move(values);
  d.bits = bits;
  return d;
}

std::uint64_t DimensionSpec::width() const noexcept {
  if (kind == DimensionKind::DiscreteSet) return values.size();
  return static_cast<std::uint64_t>(upper) - static_cast<std::uint64_t>(lower) + 1;
}

bool DimensionSpec::contains(std::int64_t value) const noexcept {
  if (kind == DimensionKind::DiscreteSet) return position(value).has_value();
  return value >= lower && value <= upper;
}

std::optional<std::size_t> DimensionSpec::position(std::int64_t value) const noexcept {
  auto it = std::find(values.begin(), values.end(), value);
  if (it == values.end()) return std::nullopt;
  return static_cast<std::size_t>(it - values.begin());
}

ContentSchema::ContentSchema(std::vector<DimensionSpec> dims, unsigned app_id_bits)
    : dims_(std::move(dims)), app_id_bits_(app_id_bits) {
  if (dims_.empty()) throw Error(ErrorCode::InvalidSchema, "schema needs at least one dimension");
  std::unordered_set<std::string> names;
  unsigned total = app_id_bits_;
  for (const auto& d : dims_) {
    validate_dimension(d);
    if (!names.insert(d.name).second) {
      throw Error(ErrorCode::InvalidSchema, "duplicate dimension name '" + d.name + "'");
    }
    total += d.bits;
  }
  if (app_id_bits_ > 64 || total > 64) {
    throw Error(ErrorCode::InvalidSchema,
                "label width " + std::to_string(total) + " exceeds 64 bits");
  }
  label_bits_ = total;
}

ContentSchema ContentSchema::uniform(std::size_t d, std::int64_t lower, std::int64_t upper,
                                     unsigned bits) {
  std::vector<DimensionSpec> dims;
  dims.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    dims.push_back(DimensionSpec::numeric("a" + std::to_string(i), lower, upper, bits));
  }
  return ContentSchema(std::move(dims));
}

std::uint64_t ContentSchema::total_ranges() const noexcept {
  unsigned bits = 0;
  for (const auto& d : dims_) bits += d.bits;
  if (bits >= 64) return std::numeric_limits<std::uint64_t>::max();
  return std::uint64_t{1} << bits;
}

std::optional<std::size_t> ContentSchema::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].name == name) return i;
  }
  return std::nullopt;
}

Predicate Predicate::range(std::string attr, std::int64_t low, std::int64_t high) {
  return Predicate{std::move(attr), low, high, ValueType::Integer, {}};
}

Predicate Predicate::at_least(std::string attr, std::int64_t low) {
  return Predicate{std::move(attr), low, std::nullopt, ValueType::Integer, {}};
}

Predicate Predicate::at_most(std::string attr, std::int64_t high) {
  return Predicate{std::move(attr), std::nullopt, high, ValueType::Integer, {}};
}

Predicate Predicate::one_of(std::string attr, std::vector<std::int64_t> values) {
  return Predicate{std::move(attr), std::nullopt, std::nullopt, ValueType::Discrete,
                   std::move(values)};
}

Predicate normalize_predicate(const Predicate& pred, const DimensionSpec& dim) {
  if (pred.attr != dim.name) {
    throw Error(ErrorCode::InvalidArgument,
                "predicate on '" + pred.attr + "' applied to " + dim_context(dim));
  }
  const bool discrete_dim = dim.kind == DimensionKind::DiscreteSet;
  if ((pred.type == ValueType::Discrete) != discrete_dim) {
    throw Error(ErrorCode::TypeMismatch, "predicate type does not match " + dim_context(dim));
  }

  if (discrete_dim) {
    // Keep admissible values only, ordered by label position.
    std::vector<std::size_t> positions;
    for (auto v : pred.values) {
      if (auto p = dim.position(v)) positions.push_back(*p);
    }
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    if (positions.empty()) {
      throw Error(ErrorCode::EmptyRange, "no admissible value in predicate on " + dim_context(dim));
    }
    Predicate out{pred.attr, std::nullopt, std::nullopt, ValueType::Discrete, {}};
    out.values.reserve(positions.size());
    for (auto p : positions) out.values.push_back(dim.values[p]);
    return out;
  }

  const std::int64_t lo = std::max(pred.low.value_or(dim.lower), dim.lower);
  const std::int64_t hi = std::min(pred.high.value_or(dim.upper), dim.upper);
  if (lo > hi) {
    throw Error(ErrorCode::EmptyRange, "predicate on " + dim_context(dim) +
                                           " does not intersect the domain");
  }
  return Predicate::range(pred.attr, lo, hi);
}

std::uint32_t interval_index(const DimensionSpec& dim, std::int64_t value) {
  if (dim.kind == DimensionKind::DiscreteSet) {
    auto p = dim.position(value);
    if (!p) {
      throw Error(ErrorCode::OutOfDomain,
                  std::to_string(value) + " is not a value of " + dim_context(dim));
    }
    return static_cast<std::uint32_t>(*p);
  }
  if (value < dim.lower || value > dim.upper) {
    throw Error(ErrorCode::OutOfDomain,
                std::to_string(value) + " outside the domain of " + dim_context(dim));
  }
  const u128 offset = static_cast<std::uint64_t>(value) - static_cast<std::uint64_t>(dim.lower);
  const u128 idx = offset * dim.granules() / dim.width();
  return static_cast<std::uint32_t>(std::min<u128>(idx, dim.granules() - 1));
}

RangeLabel encode_label(const ContentSchema& schema, std::uint64_t app_id,
                        std::span<const std::uint32_t> indices) {
  if (indices.size() != schema.size()) {
    throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(schema.size()) +
                                                " indices, got " + std::to_string(indices.size()));
  }
  if (schema.app_id_bits() < 64 && (app_id >> schema.app_id_bits()) != 0) {
    throw Error(ErrorCode::IndexOverflow, "app id does not fit in app_id_bits");
  }
  std::uint64_t bits = app_id;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& dim = schema.dim(i);
    if (indices[i] >= dim.granules()) {
      throw Error(ErrorCode::IndexOverflow, "index " + std::to_string(indices[i]) +
                                                " >= granules of " + dim_context(dim));
    }
    bits = (bits << dim.bits) | indices[i];
  }
  return RangeLabel{bits};
}

DecodedLabel decode_label(const ContentSchema& schema, RangeLabel label) {
  if (schema.label_bits() < 64 && (label.bits >> schema.label_bits()) != 0) {
    throw Error(ErrorCode::MalformedLabel, "bits set above label width");
  }
  DecodedLabel out;
  out.indices.resize(schema.size());
  std::uint64_t bits = label.bits;
  for (std::size_t i = schema.size(); i-- > 0;) {
    const auto& dim = schema.dim(i);
    out.indices[i] = static_cast<std::uint32_t>(bits & (dim.granules() - 1));
    bits >>= dim.bits;
  }
  out.app_id = bits;
  return out;
}

void validate_event(const ContentSchema& schema, const EventPoint& event) {
  if (event.values.size() != schema.size()) {
    throw Error(ErrorCode::InvalidArgument, "event has " + std::to_string(event.values.size()) +
                                                " values, schema has " +
                                                std::to_string(schema.size()) + " dimensions");
  }
}

RangeLabel event_to_label(const ContentSchema& schema, std::uint64_t app_id,
                          const EventPoint& event) {
  validate_event(schema, event);
  std::vector<std::uint32_t> indices(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    indices[i] = interval_index(schema.dim(i), event.values[i]);
  }
  return encode_label(schema, app_id, indices);
}

std::vector<Predicate> normalize_subscription(const ContentSchema& schema,
                                              const Subscription& sub) {
  std::vector<std::optional<Predicate>> slots(schema.size());
  for (const auto& p : sub.predicates) {
    auto i = schema.find(p.attr);
    if (!i) {
      throw Error(ErrorCode::InvalidSubscription, "unknown attribute '" + p.attr + "'");
    }
    if (slots[*i]) {
      throw Error(ErrorCode::InvalidSubscription, "two predicates on '" + p.attr + "'");
    }
    slots[*i] = normalize_predicate(p, schema.dim(*i));
  }
  std::vector<Predicate> out;
  out.reserve(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& dim = schema.dim(i);
    if (slots[i]) {
      out.push_back(std::move(*slots[i]));
    } else if (dim.kind == DimensionKind::DiscreteSet) {
      out.push_back(Predicate::one_of(dim.name, dim.values));
    } else {
      out.push_back(Predicate::range(dim.name, dim.lower, dim.upper));
    }
  }
  return out;
}

namespace {

std::vector<std::vector<std::uint32_t>> index_spans(const ContentSchema& schema,
                                                    const std::vector<Predicate>& preds) {
  std::vector<std::vector<std::uint32_t>> spans(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& dim = schema.dim(i);
    const auto& p = preds[i];
    if (dim.kind == DimensionKind::DiscreteSet) {
      for (auto v : p.values) spans[i].push_back(interval_index(dim, v));
    } else {
      const auto lo = interval_index(dim, *p.low);
      const auto hi = interval_index(dim, *p.high);
      spans[i].reserve(hi - lo + 1);
      for (std::uint64_t x = lo; x <= hi; ++x) spans[i].push_back(static_cast<std::uint32_t>(x));
    }
  }
  return spans;
}

std::uint64_t span_product(const std::vector<std::vector<std::uint32_t>>& spans) {
  u128 total = 1;
  for (const auto& s : spans) {
    total *= s.size();
    if (total > std::numeric_limits<std::uint64_t>::max()) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return static_cast<std::uint64_t>(total);
}

}  // namespace

std::uint64_t label_count(const ContentSchema& schema, const Subscription& sub) {
  auto preds = normalize_subscription(schema, sub);
  u128 total = 1;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& dim = schema.dim(i);
    u128 n = 0;
    if (dim.kind == DimensionKind::DiscreteSet) {
      n = preds[i].values.size();
    } else {
      n = u128{interval_index(dim, *preds[i].high)} - interval_index(dim, *preds[i].low) + 1;
    }
    total *= n;
    if (total > std::numeric_limits<std::uint64_t>::max()) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return static_cast<std::uint64_t>(total);
}

LabelSet subscription_to_labels(const ContentSchema& schema, std::uint64_t app_id,
                                const Subscription& sub, std::size_t cap) {
  const auto preds = normalize_subscription(schema, sub);
  const auto spans = index_spans(schema, preds);
  const auto total = span_product(spans);
  if (total > cap) {
    throw Error(ErrorCode::LabelSetOverflow, "subscription covers " + std::to_string(total) +
                                                 " ranges, cap is " + std::to_string(cap));
  }

  LabelSet out;
  out.reserve(total);
  std::vector<std::size_t> cursor(spans.size(), 0);
  std::vector<std::uint32_t> indices(spans.size());
  for (;;) {
    for (std::size_t i = 0; i < spans.size(); ++i) indices[i] = spans[i][cursor[i]];
    out.push_back(encode_label(schema, app_id, indices));
    std::size_t i = spans.size();
    while (i > 0) {
      --i;
      if (++cursor[i] < spans[i].size()) break;
      cursor[i] = 0;
      if (i == 0) return out;
    }
  }
}

bool evaluate(const ContentSchema& schema, const Subscription& sub, const EventPoint& event) {
  validate_event(schema, event);
  for (const auto& p : sub.predicates) {
    auto i = schema.find(p.attr);
    if (!i) throw Error(ErrorCode::InvalidSubscription, "unknown attribute '" + p.attr + "'");
    const auto v = event.values[*i];
    if (p.type == ValueType::Discrete) {
      if (std::find(p.values.begin(), p.values.end(), v) == p.values.end()) return false;
    } else {
      if (p.low && v < *p.low) return false;
      if (p.high && v > *p.high) return false;
    }
  }
  return true;
}

}  // namespace dls
