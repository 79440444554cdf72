#include "dls/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <unordered_set>

#include "dls/broker.hpp"
#include "dls/error.hpp"

namespace dls {

std::string_view to_string(Distribution d) noexcept {
  return d == Distribution::Uniform ? "uniform" : "zipf";
}

Distribution parse_distribution(std::string_view s) {
  if (s == "uniform") return Distribution::Uniform;
  if (s == "zipf") return Distribution::Zipf;
  throw Error(ErrorCode::InvalidArgument, "unknown distribution '" + std::string(s) + "'");
}

void WorkloadSpec::validate(const ContentSchema& schema) const {
  if (distribution == Distribution::Zipf && !(zipf_s > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "zipf exponent must be > 0");
  }
  if (!max_interval_len.empty() && max_interval_len.size() != schema.size()) {
    throw Error(ErrorCode::InvalidArgument, "max_interval_len needs one entry per dimension");
  }
  for (auto len : max_interval_len) {
    if (len < 1) throw Error(ErrorCode::InvalidArgument, "max_interval_len must be >= 1");
  }
}

std::uint64_t WorkloadSpec::interval_len(const ContentSchema& schema, std::size_t dim) const {
  if (!max_interval_len.empty()) return max_interval_len.at(dim);
  return std::max<std::uint64_t>(1, schema.dim(dim).width() / 8);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::InvalidArgument, "empty range");
  // Lemire's multiply-shift with rejection.
  using u128 = unsigned __int128;
  u128 product = u128{next()} * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = u128{next()} * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

ZipfSampler::ZipfSampler(std::uint64_t n, double s) : s_(s) {
  if (n == 0 || n > kMaxRanks) {
    throw Error(ErrorCode::InvalidArgument,
                "zipf rank count must be in [1, 2^24], got " + std::to_string(n));
  }
  if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "zipf exponent must be > 0");
  cdf_.resize(n);
  double acc = 0.0;
  for (std::uint64_t r = 1; r <= n; ++r) {
    acc += std::pow(static_cast<double>(r), -s);
    cdf_[r - 1] = acc;
  }
  for (auto& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

std::uint64_t ZipfSampler::sample(Rng& rng) const {
  const double u = rng.unit();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<std::uint64_t>(it - cdf_.begin()) + 1;
}

double ZipfSampler::pmf(std::uint64_t rank) const {
  if (rank < 1 || rank > cdf_.size()) return 0.0;
  return rank == 1 ? cdf_[0] : cdf_[rank - 1] - cdf_[rank - 2];
}

namespace {

constexpr std::uint64_t kSubscriptionStream = 0x5b5b;
constexpr std::uint64_t kEventStream = 0xe7e7;

// Draws positions in [0, width) per dimension from the configured law.
class PositionDraw {
 public:
  PositionDraw(const WorkloadSpec& spec, const ContentSchema& schema) : spec_(spec) {
    std::map<std::uint64_t, std::shared_ptr<const ZipfSampler>> by_width;
    for (const auto& dim : schema.dims()) {
      const auto w = dim.width();
      widths_.push_back(w);
      if (spec.distribution == Distribution::Zipf) {
        auto& z = by_width[w];
        if (!z) z = std::make_shared<const ZipfSampler>(w, spec.zipf_s);
        zipf_.push_back(z);
      }
    }
  }

  std::uint64_t operator()(std::size_t dim, Rng& rng) const {
    if (spec_.distribution == Distribution::Uniform) return rng.below(widths_[dim]);
    return zipf_[dim]->sample(rng) - 1;
  }

 private:
  const WorkloadSpec& spec_;
  std::vector<std::uint64_t> widths_;
  std::vector<std::shared_ptr<const ZipfSampler>> zipf_;
};

}  // namespace

std::vector<Subscription> gen_subscriptions(const WorkloadSpec& spec, const ContentSchema& schema) {
  spec.validate(schema);
  std::vector<Subscription> out;
  if (spec.n_subscriptions == 0) return out;
  PositionDraw draw(spec, schema);
  Rng rng(spec.seed, kSubscriptionStream);
  out.reserve(spec.n_subscriptions);
  for (std::size_t n = 0; n < spec.n_subscriptions; ++n) {
    Subscription sub;
    sub.predicates.reserve(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const auto& dim = schema.dim(i);
      const std::uint64_t lower = draw(i, rng);
      const std::uint64_t length = 1 + rng.below(spec.interval_len(schema, i));
      const std::uint64_t last = dim.width() - 1;
      const std::uint64_t upper = length > last - lower ? last : lower + length;
      if (dim.kind == DimensionKind::DiscreteSet) {
        std::vector<std::int64_t> values(dim.values.begin() + static_cast<std::ptrdiff_t>(lower),
                                         dim.values.begin() + static_cast<std::ptrdiff_t>(upper) + 1);
        sub.predicates.push_back(Predicate::one_of(dim.name, std::move(values)));
      } else {
        sub.predicates.push_back(Predicate::range(dim.name,
                                                  dim.lower + static_cast<std::int64_t>(lower),
                                                  dim.lower + static_cast<std::int64_t>(upper)));
      }
    }
    out.push_back(std::move(sub));
  }
  return out;
}

std::vector<EventPoint> gen_events(const WorkloadSpec& spec, const ContentSchema& schema) {
  spec.validate(schema);
  std::vector<EventPoint> out;
  if (spec.n_events == 0) return out;
  PositionDraw draw(spec, schema);
  Rng rng(spec.seed, kEventStream);
  out.reserve(spec.n_events);
  for (std::size_t n = 0; n < spec.n_events; ++n) {
    EventPoint e;
    e.values.reserve(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const auto& dim = schema.dim(i);
      const auto pos = draw(i, rng);
      e.values.push_back(dim.kind == DimensionKind::DiscreteSet
                             ? dim.values[pos]
                             : dim.lower + static_cast<std::int64_t>(pos));
    }
    out.push_back(std::move(e));
  }
  return out;
}

OracleIndex::OracleIndex(const ContentSchema& schema) : schema_(&schema), d_(schema.size()) {
  for (const auto& dim : schema.dims()) {
    if (dim.kind == DimensionKind::DiscreteSet) has_discrete_ = true;
  }
}

OracleIndex::OracleIndex(const ContentSchema& schema, std::span<const Subscription> subs)
    : OracleIndex(schema) {
  for (std::size_t i = 0; i < subs.size(); ++i) add(static_cast<std::uint32_t>(i), subs[i]);
}

void OracleIndex::add(std::uint32_t id, const Subscription& sub) {
  const auto preds = normalize_subscription(*schema_, sub);
  ids_.push_back(id);
  for (std::size_t i = 0; i < d_; ++i) {
    const auto& p = preds[i];
    if (p.type == ValueType::Discrete) {
      lo_.push_back(0);
      hi_.push_back(-1);
    } else {
      lo_.push_back(*p.low);
      hi_.push_back(*p.high);
    }
    if (has_discrete_) sets_.push_back(p.type == ValueType::Discrete ? p.values : std::vector<std::int64_t>{});
  }
}

bool OracleIndex::matches(std::size_t slot, const EventPoint& e) const {
  const std::size_t base = slot * d_;
  for (std::size_t i = 0; i < d_; ++i) {
    const auto v = e.values[i];
    if (has_discrete_ && schema_->dim(i).kind == DimensionKind::DiscreteSet) {
      const auto& set = sets_[base + i];
      if (std::find(set.begin(), set.end(), v) == set.end()) return false;
    } else if (v < lo_[base + i] || v > hi_[base + i]) {
      return false;
    }
  }
  return true;
}

std::vector<std::uint32_t> OracleIndex::match(const EventPoint& e) const {
  validate_event(*schema_, e);
  std::vector<std::uint32_t> out;
  for (std::size_t s = 0; s < ids_.size(); ++s) {
    if (matches(s, e)) out.push_back(ids_[s]);
  }
  return out;
}

std::vector<std::uint32_t> oracle_match(const OracleIndex& index, const EventPoint& e) {
  return index.match(e);
}

FprReport measure_fpr(const ContentSchema& schema, std::span<const Subscription> subscriptions,
                      std::span<const EventPoint> events, const CBFParams& params,
                      const FprOptions& options) {
  if (options.subscriptions_per_client == 0) {
    throw Error(ErrorCode::InvalidArgument, "subscriptions_per_client must be >= 1");
  }
  const std::size_t n_clients = std::max<std::size_t>(
      1, (subscriptions.size() + options.subscriptions_per_client - 1) /
             options.subscriptions_per_client);

  Broker broker(params);
  std::vector<ConnectionId> clients;
  for (std::size_t c = 0; c < n_clients; ++c) clients.push_back(broker.attach(ConnectionKind::Client));
  const auto publisher = broker.attach(ConnectionKind::Client);

  std::vector<OracleIndex> oracles(n_clients, OracleIndex(schema));
  std::vector<std::unordered_set<RangeLabel>> members(n_clients);
  for (std::size_t s = 0; s < subscriptions.size(); ++s) {
    const std::size_t c = s % n_clients;
    const auto labels = subscription_to_labels(schema, options.app_id, subscriptions[s],
                                               options.label_cap);
    broker.on_subscribe(clients[c], labels);
    members[c].insert(labels.begin(), labels.end());
    oracles[c].add(static_cast<std::uint32_t>(s), subscriptions[s]);
  }

  FprReport r;
  r.clients = n_clients;
  std::vector<ConnectionId> dests;
  std::vector<char> delivered(n_clients + 1);
  for (const auto& e : events) {
    const auto label = event_to_label(schema, options.app_id, e);
    broker.match_event(label, publisher, dests);
    std::fill(delivered.begin(), delivered.end(), 0);
    for (auto d : dests) delivered[d.id] = 1;

    for (std::size_t c = 0; c < n_clients; ++c) {
      ++r.decisions;
      bool truth = false;
      for (std::size_t slot = 0; slot < oracles[c].size() && !truth; ++slot) {
        truth = oracles[c].matches(slot, e);
      }
      if (delivered[c]) ++r.deliveries;
      if (truth) {
        if (!delivered[c]) ++r.false_negatives;
        continue;
      }
      ++r.negatives;
      if (!delivered[c]) continue;
      if (members[c].contains(label)) {
        ++r.mapping_fp;
      } else {
        ++r.cbf_fp;
      }
    }
  }
  if (r.decisions > 0) {
    const auto n = static_cast<double>(r.decisions);
    r.mapping_fpr = static_cast<double>(r.mapping_fp) / n;
    r.cbf_fpr = static_cast<double>(r.cbf_fp) / n;
    r.total_fpr = static_cast<double>(r.mapping_fp + r.cbf_fp) / n;
  }
  return r;
}

}  // namespace dls
