#include "dls/broker.hpp"

#include <string>

#include "dls/error.hpp"

namespace dls {

namespace {

std::string describe(ConnectionId id) {
  return std::string(id.kind == ConnectionKind::Client ? "client " : "link ") +
         std::to_string(id.id);
}

}  // namespace

const LabelSet* find_batch(const Forwarding& fwd, ConnectionId link) {
  for (const auto& b : fwd) {
    if (b.link == link) return &b.labels;
  }
  return nullptr;
}

Broker::Broker(const CBFParams& params) : params_(params) { params_.validate(); }

ConnectionId Broker::attach(ConnectionKind kind) {
  if (kind == ConnectionKind::Client) {
    clients_.emplace_back(CountingBloomFilter(params_));
    ++live_clients_;
    return {kind, static_cast<std::uint32_t>(clients_.size() - 1)};
  }
  links_.emplace_back(LinkTables{CountingBloomFilter(params_), CountingBloomFilter(params_)});
  ++live_links_;
  return {kind, static_cast<std::uint32_t>(links_.size() - 1)};
}

bool Broker::has(ConnectionId id) const noexcept {
  if (id.kind == ConnectionKind::Client) return id.id < clients_.size() && clients_[id.id];
  return id.id < links_.size() && links_[id.id];
}

void Broker::require(ConnectionId id) const {
  if (!has(id)) throw Error(ErrorCode::UnknownConnection, describe(id));
}

void Broker::detach(ConnectionId id, bool force) {
  require(id);
  if (!table(id).empty()) {
    if (!force) throw Error(ErrorCode::NonEmptyTable, describe(id));
    ++stats_.forced_detaches;
  }
  if (id.kind == ConnectionKind::Client) {
    clients_[id.id].reset();
    --live_clients_;
  } else {
    links_[id.id].reset();
    --live_links_;
  }
}

const CountingBloomFilter& Broker::table(ConnectionId id) const {
  require(id);
  return id.kind == ConnectionKind::Client ? *clients_[id.id] : links_[id.id]->ert;
}

CountingBloomFilter& Broker::table_mut(ConnectionId id) {
  require(id);
  return id.kind == ConnectionKind::Client ? *clients_[id.id] : links_[id.id]->ert;
}

const CountingBloomFilter& Broker::sff(ConnectionId link) const {
  if (link.kind != ConnectionKind::BrokerLink) {
    throw Error(ErrorCode::UnknownConnection, describe(link) + " has no forwarding filter");
  }
  require(link);
  return links_[link.id]->sff;
}

std::vector<ConnectionId> Broker::clients() const {
  std::vector<ConnectionId> out;
  for (std::uint32_t i = 0; i < clients_.size(); ++i) {
    if (clients_[i]) out.push_back({ConnectionKind::Client, i});
  }
  return out;
}

std::vector<ConnectionId> Broker::links() const {
  std::vector<ConnectionId> out;
  for (std::uint32_t i = 0; i < links_.size(); ++i) {
    if (links_[i]) out.push_back({ConnectionKind::BrokerLink, i});
  }
  return out;
}

Forwarding Broker::on_subscribe(ConnectionId origin, std::span<const RangeLabel> labels) {
  auto& origin_table = table_mut(origin);
  Forwarding fwd;
  for (std::uint32_t i = 0; i < links_.size(); ++i) {
    const ConnectionId link{ConnectionKind::BrokerLink, i};
    if (links_[i] && link != origin) fwd.push_back({link, {}});
  }

  for (auto l : labels) {
    origin_table.add(l);
    ++stats_.filter_ops;
    for (auto& batch : fwd) {
      auto& sff = links_[batch.link.id]->sff;
      if (sff.query(l) == 0) {
        batch.labels.push_back(l);
        ++stats_.queue_pushes;
      }
      sff.add(l);
      stats_.filter_ops += 2;
    }
  }
  std::erase_if(fwd, [](const LinkBatch& b) { return b.labels.empty(); });
  return fwd;
}

Forwarding Broker::on_unsubscribe(ConnectionId origin, std::span<const RangeLabel> labels) {
  auto& origin_table = table_mut(origin);
  Forwarding fwd;
  for (std::uint32_t i = 0; i < links_.size(); ++i) {
    const ConnectionId link{ConnectionKind::BrokerLink, i};
    if (links_[i] && link != origin) fwd.push_back({link, {}});
  }

  for (auto l : labels) {
    for (auto& batch : fwd) {
      auto& sff = links_[batch.link.id]->sff;
      const auto count = sff.query(l);
      ++stats_.filter_ops;
      if (count == 1) {
        batch.labels.push_back(l);
        ++stats_.queue_pushes;
      }
      if (count != 0) {
        sff.remove(l);
        ++stats_.filter_ops;
      }
    }
    ++stats_.filter_ops;
    if (origin_table.query(l) != 0) {
      origin_table.remove(l);
      ++stats_.filter_ops;
    }
  }
  std::erase_if(fwd, [](const LinkBatch& b) { return b.labels.empty(); });
  return fwd;
}

void Broker::match_event(RangeLabel label, ConnectionId origin, std::vector<ConnectionId>& out) {
  require(origin);
  out.clear();
  for (std::uint32_t i = 0; i < links_.size(); ++i) {
    const ConnectionId link{ConnectionKind::BrokerLink, i};
    if (!links_[i] || link == origin) continue;
    ++stats_.filter_ops;
    if (links_[i]->ert.query(label) >= 1) out.push_back(link);
  }
  for (std::uint32_t i = 0; i < clients_.size(); ++i) {
    const ConnectionId client{ConnectionKind::Client, i};
    if (!clients_[i] || client == origin) continue;
    ++stats_.filter_ops;
    if (clients_[i]->query(label) >= 1) out.push_back(client);
  }
}

std::vector<ConnectionId> Broker::match_event(RangeLabel label, ConnectionId origin) {
  std::vector<ConnectionId> out;
  match_event(label, origin, out);
  return out;
}

std::uint64_t Broker::saturation_events() const noexcept {
  std::uint64_t n = 0;
  for (const auto& c : clients_) {
    if (c) n += c->saturation_events();
  }
  for (const auto& l : links_) {
    if (l) n += l->ert.saturation_events() + l->sff.saturation_events();
  }
  return n;
}

std::uint64_t Broker::underflow_events() const noexcept {
  std::uint64_t n = 0;
  for (const auto& c : clients_) {
    if (c) n += c->underflow_events();
  }
  for (const auto& l : links_) {
    if (l) n += l->ert.underflow_events() + l->sff.underflow_events();
  }
  return n;
}

}  // namespace dls
