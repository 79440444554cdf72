#include "dls/overlay.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "dls/error.hpp"
#include "dls/harness.hpp"

namespace dls {

namespace {

std::string broker_name(BrokerId id) { return "broker " + std::to_string(id); }

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
  std::vector<std::size_t> parent;
};

}  // namespace

void validate_topology(const Topology& t) {
  if (t.brokers.empty()) throw Error(ErrorCode::InvalidTopology, "no brokers");
  std::map<BrokerId, std::size_t> index;
  for (auto b : t.brokers) {
    if (!index.emplace(b, index.size()).second) {
      throw Error(ErrorCode::InvalidTopology, "duplicate " + broker_name(b));
    }
  }
  DisjointSets sets(index.size());
  std::size_t components = index.size();
  for (auto [a, b] : t.links) {
    const auto ia = index.find(a);
    const auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      throw Error(ErrorCode::InvalidTopology,
                  "link " + std::to_string(a) + "-" + std::to_string(b) + " names an unknown broker");
    }
    if (a == b) throw Error(ErrorCode::InvalidTopology, "self-link on " + broker_name(a));
    if (!sets.unite(ia->second, ib->second)) {
      throw Error(ErrorCode::CyclicTopology,
                  "link " + std::to_string(a) + "-" + std::to_string(b) + " closes a cycle");
    }
    --components;
  }
  if (components != 1) throw Error(ErrorCode::InvalidTopology, "broker graph is not connected");

  std::unordered_set<ClientId> seen;
  for (auto [c, b] : t.clients) {
    if (!seen.insert(c).second) {
      throw Error(ErrorCode::InvalidTopology, "client " + std::to_string(c) + " has two homes");
    }
    if (!index.contains(b)) {
      throw Error(ErrorCode::InvalidTopology,
                  "client " + std::to_string(c) + " is homed on unknown " + broker_name(b));
    }
  }

  t.cbf.validate();
  for (const auto& [b, p] : t.overrides) {
    if (!index.contains(b)) {
      throw Error(ErrorCode::InvalidTopology, "override for unknown " + broker_name(b));
    }
    p.validate();
    if (p != t.cbf && !t.allow_params_mismatch) {
      throw Error(ErrorCode::ParamsMismatch,
                  broker_name(b) + " filter parameters differ from the network-wide block");
    }
  }
}

Simulator::Simulator(const Topology& topology, std::size_t label_width)
    : topology_(topology), label_width_(label_width) {
  validate_topology(topology_);
  if (label_width_ < 1 || label_width_ > 8) {
    throw Error(ErrorCode::InvalidArgument, "label width must be 1..8 bytes");
  }
  nodes_.reserve(topology_.brokers.size());
  for (auto b : topology_.brokers) {
    const auto it = topology_.overrides.find(b);
    const CBFParams& params = it == topology_.overrides.end() ? topology_.cbf : it->second;
    node_index_[b] = nodes_.size();
    nodes_.push_back(Node{b, Broker(params), {}, {}, {}});
  }
  for (auto [a, b] : topology_.links) {
    auto& na = nodes_[node_index_.at(a)];
    auto& nb = nodes_[node_index_.at(b)];
    const auto ca = na.broker.attach(ConnectionKind::BrokerLink);
    const auto cb = nb.broker.attach(ConnectionKind::BrokerLink);
    na.to_neighbour[b] = ca;
    na.neighbour_of_link[ca.id] = b;
    nb.to_neighbour[a] = cb;
    nb.neighbour_of_link[cb.id] = a;
    traffic_index_[{a, b}] = 0;
    traffic_index_[{b, a}] = 0;
  }
  for (auto& [key, slot] : traffic_index_) {
    slot = metrics_.links.size();
    metrics_.links.push_back(LinkTraffic{key.first, key.second, 0, 0, 0, 0});
  }
  distinct_per_link_.resize(metrics_.links.size());
  for (auto [c, b] : topology_.clients) {
    const auto n = node_index_.at(b);
    const auto conn = nodes_[n].broker.attach(ConnectionKind::Client);
    nodes_[n].client_of_conn[conn.id] = c;
    clients_[c] = ClientHome{n, conn};
  }
}

std::size_t Simulator::node_index(BrokerId id) const {
  const auto it = node_index_.find(id);
  if (it == node_index_.end()) throw Error(ErrorCode::InvalidArgument, "unknown " + broker_name(id));
  return it->second;
}

const Broker& Simulator::broker(BrokerId id) const { return nodes_[node_index(id)].broker; }

ConnectionId Simulator::link(BrokerId at, BrokerId toward) const {
  const auto& node = nodes_[node_index(at)];
  const auto it = node.to_neighbour.find(toward);
  if (it == node.to_neighbour.end()) {
    throw Error(ErrorCode::InvalidArgument,
                broker_name(at) + " has no link to " + broker_name(toward));
  }
  return it->second;
}

ConnectionId Simulator::client_connection(ClientId client) const {
  const auto it = clients_.find(client);
  if (it == clients_.end()) throw Error(ErrorCode::UnknownClient, std::to_string(client));
  return it->second.conn;
}

BrokerId Simulator::home(ClientId client) const {
  const auto it = clients_.find(client);
  if (it == clients_.end()) throw Error(ErrorCode::UnknownClient, std::to_string(client));
  return nodes_[it->second.node].id;
}

void Simulator::inject(ClientId client, MsgKind kind, LabelSet labels) {
  const auto it = clients_.find(client);
  if (it == clients_.end()) throw Error(ErrorCode::UnknownClient, std::to_string(client));
  Envelope env;
  env.node = it->second.node;
  env.origin = it->second.conn;
  env.bytes = encode_message(WireMessage{kind, std::move(labels)}, label_width_);
  if (kind == MsgKind::Publish) {
    env.publisher = client;
    env.trace = traces_.size();
    traces_.push_back(TraceRecord{read_label({env.bytes.data() + 5, label_width_}, label_width_),
                                  client, {}, {}});
  }
  queue_.push_back(std::move(env));
}

void Simulator::send(std::size_t from, BrokerId to, MsgKind kind, const LabelSet& labels,
                     ClientId publisher, std::size_t trace) {
  const BrokerId from_id = nodes_[from].id;
  const std::size_t to_node = node_index_.at(to);
  Envelope env;
  env.node = to_node;
  env.origin = nodes_[to_node].to_neighbour.at(from_id);
  env.publisher = publisher;
  env.trace = trace;
  env.bytes = encode_message(WireMessage{kind, labels}, label_width_);

  const std::size_t slot = traffic_index_.at({from_id, to});
  auto& traffic = metrics_.links[slot];
  ++metrics_.link_messages;
  metrics_.wire_bytes += env.bytes.size();
  switch (kind) {
    case MsgKind::Subscribe:
      traffic.subscribe_labels += labels.size();
      for (auto l : labels) {
        if (distinct_per_link_[slot].insert(l).second) ++traffic.distinct_subscribe_labels;
        if (distinct_all_.insert(l).second) ++metrics_.distinct_forwarded_labels;
      }
      break;
    case MsgKind::Unsubscribe:
      traffic.unsubscribe_labels += labels.size();
      break;
    case MsgKind::Publish:
      ++traffic.publishes;
      break;
  }
  queue_.push_back(std::move(env));
}

void Simulator::step(Envelope& env) {
  ++metrics_.steps;
  const WireMessage msg = decode_message(env.bytes, label_width_);
  Node& node = nodes_[env.node];

  if (msg.kind == MsgKind::Publish) {
    auto& trace = traces_[env.trace];
    trace.path.push_back(node.id);
    const auto label = msg.labels.front();
    for (auto dest : node.broker.match_event(label, env.origin)) {
      if (dest.kind == ConnectionKind::Client) {
        trace.delivered.push_back(node.client_of_conn.at(dest.id));
        ++metrics_.deliveries;
      } else {
        send(env.node, node.neighbour_of_link.at(dest.id), MsgKind::Publish, msg.labels,
             env.publisher, env.trace);
      }
    }
    return;
  }

  const Forwarding fwd = msg.kind == MsgKind::Subscribe
                             ? node.broker.on_subscribe(env.origin, msg.labels)
                             : node.broker.on_unsubscribe(env.origin, msg.labels);
  for (const auto& batch : fwd) {
    send(env.node, node.neighbour_of_link.at(batch.link.id), msg.kind, batch.labels, 0, 0);
  }
}

SimMetrics Simulator::run_to_quiescence() {
  const SimMetrics before = metrics_;
  std::size_t oldest_trace = traces_.size();
  while (!queue_.empty()) {
    Envelope env = std::move(queue_.front());
    queue_.pop_front();
    if (!env.bytes.empty() && env.bytes[0] == static_cast<std::uint8_t>(MsgKind::Publish)) {
      oldest_trace = std::min(oldest_trace, env.trace);
    }
    step(env);
  }
  for (std::size_t t = oldest_trace; t < traces_.size(); ++t) {
    std::sort(traces_[t].delivered.begin(), traces_[t].delivered.end());
  }

  SimMetrics delta = metrics_;
  for (std::size_t i = 0; i < delta.links.size(); ++i) {
    auto& d = delta.links[i];
    const auto& b = before.links[i];
    d.subscribe_labels -= b.subscribe_labels;
    d.unsubscribe_labels -= b.unsubscribe_labels;
    d.publishes -= b.publishes;
    d.distinct_subscribe_labels -= b.distinct_subscribe_labels;
  }
  delta.distinct_forwarded_labels -= before.distinct_forwarded_labels;
  delta.deliveries -= before.deliveries;
  delta.steps -= before.steps;
  delta.link_messages -= before.link_messages;
  delta.wire_bytes -= before.wire_bytes;
  return delta;
}

std::uint64_t Simulator::saturation_events() const noexcept {
  std::uint64_t n = 0;
  for (const auto& node : nodes_) n += node.broker.saturation_events();
  return n;
}

std::uint64_t Simulator::underflow_events() const noexcept {
  std::uint64_t n = 0;
  for (const auto& node : nodes_) n += node.broker.underflow_events();
  return n;
}

void inject_subscriptions(Simulator& sim, const ContentSchema& schema, std::uint64_t app_id,
                          std::span<const ClientSubscription> subs, std::size_t label_cap) {
  for (const auto& s : subs) {
    sim.inject(s.client, MsgKind::Subscribe,
               subscription_to_labels(schema, app_id, s.subscription, label_cap));
  }
  sim.run_to_quiescence();
}

EndToEndReport end_to_end_check(Simulator& sim, const ContentSchema& schema,
                                std::uint64_t app_id, std::span<const ClientSubscription> subs,
                                std::span<const ClientEvent> events, std::size_t label_cap) {
  OracleIndex oracle(schema);
  std::unordered_map<ClientId, std::unordered_set<RangeLabel>> members;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    oracle.add(static_cast<std::uint32_t>(i), subs[i].subscription);
    const auto labels = subscription_to_labels(schema, app_id, subs[i].subscription, label_cap);
    members[subs[i].client].insert(labels.begin(), labels.end());
  }

  EndToEndReport r;
  std::vector<ClientId> truth;
  for (const auto& ev : events) {
    const auto label = event_to_label(schema, app_id, ev.event);
    const std::size_t trace_index = sim.traces().size();
    sim.inject(ev.publisher, MsgKind::Publish, {label});
    sim.run_to_quiescence();
    const auto& delivered = sim.traces()[trace_index].delivered;

    truth.clear();
    for (auto id : oracle.match(ev.event)) {
      if (subs[id].client != ev.publisher) truth.push_back(subs[id].client);
    }
    std::sort(truth.begin(), truth.end());
    truth.erase(std::unique(truth.begin(), truth.end()), truth.end());

    ++r.events;
    r.deliveries += delivered.size();
    r.true_deliveries += truth.size();
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < truth.size() || j < delivered.size()) {
      if (j == delivered.size() || (i < truth.size() && truth[i] < delivered[j])) {
        ++r.false_negatives;
        ++i;
      } else if (i == truth.size() || delivered[j] < truth[i]) {
        const auto it = members.find(delivered[j]);
        if (it != members.end() && it->second.contains(label)) {
          ++r.mapping_fps;
        } else {
          ++r.cbf_fps;
        }
        ++j;
      } else {
        ++i;
        ++j;
      }
    }
  }
  return r;
}

Topology chain_topology(std::size_t n_brokers, std::size_t clients_per_broker,
                        const CBFParams& params) {
  Topology t;
  t.cbf = params;
  ClientId next = 1;
  for (BrokerId b = 1; b <= n_brokers; ++b) {
    t.brokers.push_back(b);
    if (b > 1) t.links.emplace_back(b - 1, b);
    for (std::size_t c = 0; c < clients_per_broker; ++c) t.clients.emplace_back(next++, b);
  }
  return t;
}

}  // namespace dls
