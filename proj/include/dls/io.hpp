#pragma once

// File formats.
//
// Schema (JSON):
//   {"app_id_bits": 0,
//    "dimensions": [{"name": "price", "kind": "numeric", "lower": 0, "upper": 1023, "bits": 5},
//                   {"name": "venue", "kind": "discrete", "values": [1, 2, 7], "bits": 2}]}
//
// Topology (JSON):
//   {"brokers": [1, 2, 3], "links": [[1, 2], [2, 3]], "clients": [[10, 1], [11, 3]],
//    "cbf": {"m": 16384, "k_hash": 4, "counter_bits": 4, "seed_a": 1, "seed_b": 2},
//    "overrides": {"2": {...}}, "allow_params_mismatch": false}
//
// Workload (text): '#' header lines, then one record per line.
//   # dls-workload 1
//   # seed 42
//   # distribution zipf 1
//   # schema {...single-line schema JSON...}
//   S <dim0> <dim1> ...   numeric dims as lo:hi, discrete dims as v1,v2,...
//   E <v0> <v1> ...
// Fields are separated by single tabs.
//
// Trace (text): one line per publish,
//   <label hex>\t<publisher>\t<delivered, comma separated or ->\t<broker path>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dls/cbf.hpp"
#include "dls/harness.hpp"
#include "dls/label_space.hpp"
#include "dls/overlay.hpp"

namespace dls {

std::string schema_to_json(const ContentSchema& schema, int indent = -1);
ContentSchema schema_from_json(std::string_view text);

std::string cbf_params_to_json(const CBFParams& params);
CBFParams cbf_params_from_json(std::string_view text);

std::string topology_to_json(const Topology& topology, int indent = 2);
Topology topology_from_json(std::string_view text);

struct Workload {
  ContentSchema schema;
  std::uint64_t seed = 0;
  Distribution distribution = Distribution::Uniform;
  double zipf_s = 1.0;
  std::vector<Subscription> subscriptions;
  std::vector<EventPoint> events;
};

// Generated subscriptions constrain every dimension in schema order, which
// is the only shape the writer accepts.
void write_workload(std::ostream& out, const Workload& workload);
Workload read_workload(std::istream& in);

std::string format_trace_record(const TraceRecord& record);
void write_traces(std::ostream& out, const std::vector<TraceRecord>& traces);

// Whole-file helpers; throw IoError.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace dls
