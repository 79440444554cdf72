#pragma once

// A single DLS broker. Every connection owns a counting Bloom filter: a
// client's filter holds that client's subscribed labels, a broker link's
// filter (its event routing table, ERT) holds the labels the neighbour has
// forwarded over the link. Each link additionally has a subscription
// forwarding filter (SFF) aggregating every label this broker has accepted
// from the *other* side of the link; a label is forwarded over the link only
// when that filter reports it absent.
//
// All filters of a broker share one CBFParams value.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dls/cbf.hpp"
#include "dls/label_space.hpp"
#include "dls/wire.hpp"

namespace dls {

enum class ConnectionKind : std::uint8_t { Client, BrokerLink };

struct ConnectionId {
  ConnectionKind kind = ConnectionKind::Client;
  std::uint32_t id = 0;
  auto operator<=>(const ConnectionId&) const = default;
};

struct BrokerMsg {
  MsgKind kind = MsgKind::Subscribe;
  LabelSet labels;
  ConnectionId origin;
};

struct LinkBatch {
  ConnectionId link;
  LabelSet labels;
};

// Labels to send, one batch per outgoing link, in link-id order. Links with
// nothing to send are omitted.
using Forwarding = std::vector<LinkBatch>;

const LabelSet* find_batch(const Forwarding& fwd, ConnectionId link);

struct BrokerStats {
  std::uint64_t filter_ops = 0;    // add, remove and query calls
  std::uint64_t queue_pushes = 0;  // labels appended to forwarding batches
  std::uint64_t forced_detaches = 0;
};

class Broker {
 public:
  explicit Broker(const CBFParams& params);

  ConnectionId attach(ConnectionKind kind);
  // Throws UnknownConnection, or NonEmptyTable if the connection's table
  // still holds labels and `force` is false. A forced client detach leaves
  // its labels counted in the SFFs.
  void detach(ConnectionId id, bool force = false);

  // Insertion and aggregation. For each label: add it to the origin's table;
  // then for every link other than the origin, queue it for that link if the
  // link's SFF reports it absent, and add it to that SFF.
  Forwarding on_subscribe(ConnectionId origin, std::span<const RangeLabel> labels);

  // Deletion. For every link other than the origin, a label whose SFF count
  // is exactly 1 is queued for that link; nonzero SFF counts are
  // decremented. The origin's table is decremented if it reports the label.
  Forwarding on_unsubscribe(ConnectionId origin, std::span<const RangeLabel> labels);

  // Every link whose ERT reports the label and every client whose filter
  // reports it, except the origin connection itself.
  std::vector<ConnectionId> match_event(RangeLabel label, ConnectionId origin);
  void match_event(RangeLabel label, ConnectionId origin, std::vector<ConnectionId>& out);

  const CBFParams& params() const noexcept { return params_; }
  // Client filter or ERT.
  const CountingBloomFilter& table(ConnectionId id) const;
  const CountingBloomFilter& sff(ConnectionId link) const;
  bool has(ConnectionId id) const noexcept;

  std::vector<ConnectionId> clients() const;
  std::vector<ConnectionId> links() const;
  std::size_t client_count() const noexcept { return live_clients_; }
  std::size_t link_count() const noexcept { return live_links_; }

  const BrokerStats& stats() const noexcept { return stats_; }
  // Summed over every live filter.
  std::uint64_t saturation_events() const noexcept;
  std::uint64_t underflow_events() const noexcept;

 private:
  struct LinkTables {
    CountingBloomFilter ert;
    CountingBloomFilter sff;
  };

  CountingBloomFilter& table_mut(ConnectionId id);
  void require(ConnectionId id) const;

  CBFParams params_;
  std::vector<std::optional<CountingBloomFilter>> clients_;
  std::vector<std::optional<LinkTables>> links_;
  std::size_t live_clients_ = 0;
  std::size_t live_links_ = 0;
  BrokerStats stats_;
};

}  // namespace dls
