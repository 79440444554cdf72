#pragma once

// Command implementations behind the `dls` tool. Each command writes its
// report to an ostream so it can be driven in-process.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dls/cbf.hpp"
#include "dls/harness.hpp"
#include "dls/io.hpp"
#include "dls/label_space.hpp"
#include "dls/overlay.hpp"

namespace dls {

enum class OutputFormat { Text, Csv };

OutputFormat parse_format(const std::string& s);

// Where a command's schema comes from: a JSON file, or d numeric dimensions
// over [lower, upper] with g granules each.
struct SchemaSource {
  std::string path;
  std::size_t dims = 2;
  std::uint64_t granule = 32;
  std::int64_t lower = 0;
  std::int64_t upper = (std::int64_t{1} << 20) - 1;

  ContentSchema load() const;
  ContentSchema with_granule(std::uint64_t g) const;
};

// log2(g); throws InvalidArgument unless g is a power of two >= 2.
unsigned granule_bits(std::uint64_t g);

struct GenConfig {
  SchemaSource schema;
  WorkloadSpec workload;
  std::string out;  // empty: stdout
};

// Writes the workload file and prints a one-line summary to `report`.
void cmd_gen(const GenConfig& config, std::ostream& report, std::ostream& data);

struct BenchOptions {
  std::size_t clients = 8;         // subscriber clients on the broker
  std::size_t delete_sample = 10000;
  std::size_t match_repeats = 5;   // best-of for the matching timer
  bool timing = true;
};

struct BenchCell {
  std::size_t n_subscriptions = 0;
  std::size_t dims = 0;
  std::uint64_t granule = 0;
  std::uint64_t labels_inserted = 0;
  std::uint64_t forwarded_labels = 0;
  std::uint64_t distinct_forwarded = 0;
  std::uint64_t saturation_events = 0;
  double insert_us_per_sub = 0.0;
  double delete_us_per_sub = 0.0;
  double match_ns_per_event = 0.0;
};

// One broker with `clients` subscriber clients, one publisher and one uplink.
// Subscriptions are dealt round-robin to the clients and every label the
// broker forwards over the uplink is counted. Events are matched from the
// publisher, then the last `delete_sample` subscriptions are removed.
BenchCell run_bench_cell(const ContentSchema& schema, std::span<const Subscription> subs,
                         std::span<const EventPoint> events, const CBFParams& params,
                         const BenchOptions& options = {});

struct BenchConfig {
  SchemaSource schema;
  std::string workload_path;  // replaces generation when set
  std::vector<std::uint64_t> granules;     // empty: schema as given
  std::vector<std::size_t> n_subscriptions;
  WorkloadSpec workload;                   // n_subscriptions taken from the list
  CBFParams cbf;
  BenchOptions options;
  OutputFormat format = OutputFormat::Text;
};

std::vector<BenchCell> cmd_bench(const BenchConfig& config, std::ostream& out);

struct FprRow {
  std::string sweep;  // "granule" or "m"
  std::uint64_t granule = 0;
  std::uint32_t m = 0;
  FprReport report;
};

struct FprConfig {
  SchemaSource schema;  // granule is the fixed g of the m sweep
  std::string workload_path;  // replaces generation; its schema's bits are swept
  WorkloadSpec workload;
  CBFParams cbf;        // m is the fixed m of the granule sweep
  std::vector<std::uint64_t> granules{8, 16, 32, 64, 128};
  std::vector<std::uint32_t> m_values{1u << 8, 1u << 10, 1u << 12, 1u << 14, 1u << 16};
  bool granule_sweep = true;
  bool m_sweep = true;
  FprOptions options;
  OutputFormat format = OutputFormat::Text;
};

std::vector<FprRow> cmd_fpr(const FprConfig& config, std::ostream& out);

struct SimConfig {
  std::string topology_path;
  std::optional<Topology> topology;  // used when no path is given
  std::string workload_path;
  std::optional<Workload> workload;  // used when no path is given
  std::uint64_t app_id = 0;
  std::string trace_out;             // empty: no trace file
  bool negative_control = false;
  OutputFormat format = OutputFormat::Text;
};

struct SimResult {
  EndToEndReport report;
  SimMetrics metrics;
  std::uint64_t saturation_events = 0;
  std::uint64_t underflow_events = 0;
  int exit_code = 0;
};

// Subscriptions go round-robin to the topology's clients in file order;
// event i is published by client (i + 1) mod C. Exit code 0 iff no false
// negatives, or, under negative_control, iff at least one.
SimResult cmd_sim(const SimConfig& config, std::ostream& out);

// Parses `args` (without the program name) and runs one command. Returns
// the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dls
