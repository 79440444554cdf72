#pragma once

// Deterministic simulator of a tree of DLS brokers with attached clients.
// Messages travel between brokers in their wire encoding through one global
// FIFO queue, so every link is FIFO as well; one step processes one message.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dls/broker.hpp"
#include "dls/cbf.hpp"
#include "dls/label_space.hpp"
#include "dls/wire.hpp"

namespace dls {

using BrokerId = std::uint32_t;
using ClientId = std::uint32_t;

struct Topology {
  std::vector<BrokerId> brokers;
  std::vector<std::pair<BrokerId, BrokerId>> links;  // undirected
  std::vector<std::pair<ClientId, BrokerId>> clients;  // client -> home broker
  CBFParams cbf;
  // Per-broker parameters. Anything different from `cbf` is rejected with
  // ParamsMismatch unless allow_params_mismatch is set (negative controls).
  std::map<BrokerId, CBFParams> overrides;
  bool allow_params_mismatch = false;
};

// Checks the tree and parameter rules; throws InvalidTopology,
// CyclicTopology or ParamsMismatch.
void validate_topology(const Topology& topology);

struct TraceRecord {
  RangeLabel label;
  ClientId publisher = 0;
  std::vector<ClientId> delivered;  // ascending
  std::vector<BrokerId> path;       // brokers that processed the event, in order
};

struct LinkTraffic {
  BrokerId from = 0;
  BrokerId to = 0;
  std::uint64_t subscribe_labels = 0;
  std::uint64_t unsubscribe_labels = 0;
  std::uint64_t publishes = 0;
  std::uint64_t distinct_subscribe_labels = 0;
};

struct SimMetrics {
  std::vector<LinkTraffic> links;  // one per direction, ordered by (from, to)
  std::uint64_t distinct_forwarded_labels = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t steps = 0;
  std::uint64_t link_messages = 0;
  std::uint64_t wire_bytes = 0;
};

class Simulator {
 public:
  // `label_width` is the wire width of one label in bytes.
  explicit Simulator(const Topology& topology, std::size_t label_width = 8);

  // Queues a message from `client` to its home broker. Publish carries one
  // label. Throws UnknownClient.
  void inject(ClientId client, MsgKind kind, LabelSet labels);
  // Processes queued messages until none remain. Returns the change in
  // every metric over this call.
  SimMetrics run_to_quiescence();

  // Cumulative metrics.
  const SimMetrics& metrics() const noexcept { return metrics_; }
  const std::vector<TraceRecord>& traces() const noexcept { return traces_; }
  void clear_traces() noexcept { traces_.clear(); }

  const Topology& topology() const noexcept { return topology_; }
  std::size_t label_width() const noexcept { return label_width_; }
  const Broker& broker(BrokerId id) const;
  // The connection at `at` leading to neighbour `toward`.
  ConnectionId link(BrokerId at, BrokerId toward) const;
  ConnectionId client_connection(ClientId client) const;
  BrokerId home(ClientId client) const;
  bool has_client(ClientId client) const noexcept { return clients_.contains(client); }

  std::uint64_t saturation_events() const noexcept;
  std::uint64_t underflow_events() const noexcept;

 private:
  struct Node {
    BrokerId id = 0;
    Broker broker;
    std::map<BrokerId, ConnectionId> to_neighbour;
    std::unordered_map<std::uint32_t, BrokerId> neighbour_of_link;  // link conn id -> neighbour
    std::unordered_map<std::uint32_t, ClientId> client_of_conn;     // client conn id -> client
  };
  struct ClientHome {
    std::size_t node = 0;
    ConnectionId conn;
  };
  struct Envelope {
    std::size_t node = 0;
    ConnectionId origin;
    ClientId publisher = 0;  // publishes only
    std::size_t trace = 0;   // publishes only
    std::vector<std::uint8_t> bytes;
  };

  std::size_t node_index(BrokerId id) const;
  void step(Envelope& env);
  void send(std::size_t from, BrokerId to, MsgKind kind, const LabelSet& labels,
            ClientId publisher, std::size_t trace);

  Topology topology_;
  std::size_t label_width_;
  std::vector<Node> nodes_;
  std::map<BrokerId, std::size_t> node_index_;
  std::unordered_map<ClientId, ClientHome> clients_;
  std::deque<Envelope> queue_;
  std::map<std::pair<BrokerId, BrokerId>, std::size_t> traffic_index_;
  std::vector<std::unordered_set<RangeLabel>> distinct_per_link_;
  std::unordered_set<RangeLabel> distinct_all_;
  std::vector<TraceRecord> traces_;
  SimMetrics metrics_;
};

struct ClientSubscription {
  ClientId client = 0;
  Subscription subscription;
};

struct ClientEvent {
  ClientId publisher = 0;
  EventPoint event;
};

struct EndToEndReport {
  std::uint64_t events = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t true_deliveries = 0;  // (event, client) pairs the exact oracle accepts
  std::uint64_t false_negatives = 0;
  std::uint64_t mapping_fps = 0;      // label inside the client's label set, predicate rejects
  std::uint64_t cbf_fps = 0;          // label outside the client's label set
};

// Subscribes every entry through its client and runs to quiescence.
void inject_subscriptions(Simulator& sim, const ContentSchema& schema, std::uint64_t app_id,
                          std::span<const ClientSubscription> subs,
                          std::size_t label_cap = kDefaultLabelCap);

// Publishes each event, one at a time to quiescence, and compares every
// delivery set with the exact oracle over `subs` (which must already be
// active). The publisher never counts as a recipient.
EndToEndReport end_to_end_check(Simulator& sim, const ContentSchema& schema,
                                std::uint64_t app_id, std::span<const ClientSubscription> subs,
                                std::span<const ClientEvent> events,
                                std::size_t label_cap = kDefaultLabelCap);

// B1 - B2 - ... - Bn, ids 1..n, `clients_per_broker` clients on each broker
// numbered consecutively from 1 (broker 1 first).
Topology chain_topology(std::size_t n_brokers, std::size_t clients_per_broker,
                        const CBFParams& params);

}  // namespace dls
