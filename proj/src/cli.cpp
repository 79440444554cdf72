#include "dls/cli.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>

#include "dls/broker.hpp"
#include "dls/error.hpp"
#include "dls/io.hpp"

namespace dls {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Text tables: left-aligned first column, right-aligned the rest.
void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return;
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto pad = std::string(width[i] - r[i].size(), ' ');
      if (i == 0) {
        out << r[i] << pad;
      } else {
        out << "  " << pad << r[i];
      }
    }
    out << '\n';
  }
}

void print_csv(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
}

// Opens `path` for writing, or returns `fallback` when the path is empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw Error(ErrorCode::IoError, "cannot write " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

Workload load_workload(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_workload(in);
}

ContentSchema rebits(const ContentSchema& schema, unsigned bits) {
  std::vector<DimensionSpec> dims(schema.dims().begin(), schema.dims().end());
  for (auto& d : dims) d.bits = bits;
  return ContentSchema(std::move(dims), schema.app_id_bits());
}

}  // namespace

OutputFormat parse_format(const std::string& s) {
  if (s == "text" || s == "structured-text") return OutputFormat::Text;
  if (s == "csv") return OutputFormat::Csv;
  throw Error(ErrorCode::InvalidArgument, "unknown format '" + s + "'");
}

unsigned granule_bits(std::uint64_t g) {
  if (g < 2 || !std::has_single_bit(g) || g > (std::uint64_t{1} << 32)) {
    throw Error(ErrorCode::InvalidArgument,
                "granule must be a power of two in [2, 2^32], got " + std::to_string(g));
  }
  return static_cast<unsigned>(std::countr_zero(g));
}

ContentSchema SchemaSource::load() const {
  if (!path.empty()) return schema_from_json(read_file(path));
  if (dims == 0) throw Error(ErrorCode::InvalidArgument, "dims must be >= 1");
  return ContentSchema::uniform(dims, lower, upper, granule_bits(granule));
}

ContentSchema SchemaSource::with_granule(std::uint64_t g) const {
  return rebits(load(), granule_bits(g));
}

void cmd_gen(const GenConfig& config, std::ostream& report, std::ostream& data) {
  Workload w;
  w.schema = config.schema.load();
  w.seed = config.workload.seed;
  w.distribution = config.workload.distribution;
  w.zipf_s = config.workload.zipf_s;
  w.subscriptions = gen_subscriptions(config.workload, w.schema);
  w.events = gen_events(config.workload, w.schema);
  Sink sink(config.out, data);
  write_workload(sink.get(), w);
  report << "subscriptions " << w.subscriptions.size() << "\nevents " << w.events.size()
         << "\nseed " << w.seed << "\ndistribution " << to_string(w.distribution) << '\n';
}

BenchCell run_bench_cell(const ContentSchema& schema, std::span<const Subscription> subs,
                         std::span<const EventPoint> events, const CBFParams& params,
                         const BenchOptions& options) {
  if (options.clients == 0) throw Error(ErrorCode::InvalidArgument, "clients must be >= 1");
  Broker broker(params);
  std::vector<ConnectionId> clients;
  for (std::size_t c = 0; c < options.clients; ++c) {
    clients.push_back(broker.attach(ConnectionKind::Client));
  }
  const auto publisher = broker.attach(ConnectionKind::Client);
  const auto uplink = broker.attach(ConnectionKind::BrokerLink);

  BenchCell cell;
  cell.n_subscriptions = subs.size();
  cell.dims = schema.size();
  cell.granule = schema.size() ? schema.dim(0).granules() : 0;

  std::unordered_set<RangeLabel> distinct;
  double insert_s = 0.0;
  for (std::size_t s = 0; s < subs.size(); ++s) {
    const auto start = Clock::now();
    const auto labels = subscription_to_labels(schema, 0, subs[s]);
    const auto fwd = broker.on_subscribe(clients[s % clients.size()], labels);
    insert_s += seconds_since(start);
    cell.labels_inserted += labels.size();
    if (const auto* batch = find_batch(fwd, uplink)) {
      cell.forwarded_labels += batch->size();
      distinct.insert(batch->begin(), batch->end());
    }
  }
  cell.distinct_forwarded = distinct.size();

  LabelSet event_labels;
  event_labels.reserve(events.size());
  for (const auto& e : events) event_labels.push_back(event_to_label(schema, 0, e));
  std::vector<ConnectionId> dests;
  double best_match = 0.0;
  for (std::size_t rep = 0; rep < std::max<std::size_t>(1, options.match_repeats); ++rep) {
    const auto start = Clock::now();
    for (auto l : event_labels) broker.match_event(l, publisher, dests);
    const double t = seconds_since(start);
    if (rep == 0 || t < best_match) best_match = t;
  }

  const std::size_t n_delete = std::min(options.delete_sample, subs.size());
  double delete_s = 0.0;
  for (std::size_t s = subs.size() - n_delete; s < subs.size(); ++s) {
    const auto start = Clock::now();
    const auto labels = subscription_to_labels(schema, 0, subs[s]);
    broker.on_unsubscribe(clients[s % clients.size()], labels);
    delete_s += seconds_since(start);
  }
  cell.saturation_events = broker.saturation_events();

  if (options.timing) {
    if (!subs.empty()) cell.insert_us_per_sub = insert_s * 1e6 / static_cast<double>(subs.size());
    if (n_delete) cell.delete_us_per_sub = delete_s * 1e6 / static_cast<double>(n_delete);
    if (!events.empty()) cell.match_ns_per_event = best_match * 1e9 / static_cast<double>(events.size());
  }
  return cell;
}

std::vector<BenchCell> cmd_bench(const BenchConfig& config, std::ostream& out) {
  std::vector<BenchCell> cells;
  if (!config.workload_path.empty()) {
    const auto w = load_workload(config.workload_path);
    cells.push_back(run_bench_cell(w.schema, w.subscriptions, w.events, config.cbf, config.options));
  } else {
    std::vector<std::uint64_t> granules = config.granules;
    if (granules.empty()) granules.push_back(config.schema.granule);
    std::vector<std::size_t> sizes = config.n_subscriptions;
    if (sizes.empty()) sizes.push_back(config.workload.n_subscriptions);
    for (auto g : granules) {
      const auto schema = config.schema.with_granule(g);
      for (auto n : sizes) {
        WorkloadSpec spec = config.workload;
        spec.n_subscriptions = n;
        const auto subs = gen_subscriptions(spec, schema);
        const auto events = gen_events(spec, schema);
        cells.push_back(run_bench_cell(schema, subs, events, config.cbf, config.options));
      }
    }
  }

  const bool timing = config.options.timing;
  auto timed = [&](double v, const char* f) { return timing ? fmt(f, v) : std::string("-"); };
  if (config.format == OutputFormat::Csv) {
    std::vector<std::vector<std::string>> rows{{"n_subscriptions", "dims", "granule",
                                                "labels_inserted", "forwarded_labels",
                                                "distinct_forwarded", "saturation_events",
                                                "insert_us_per_sub", "delete_us_per_sub",
                                                "match_ns_per_event"}};
    for (const auto& c : cells) {
      rows.push_back({std::to_string(c.n_subscriptions), std::to_string(c.dims),
                      std::to_string(c.granule), std::to_string(c.labels_inserted),
                      std::to_string(c.forwarded_labels), std::to_string(c.distinct_forwarded),
                      std::to_string(c.saturation_events), timed(c.insert_us_per_sub, "%.3f"),
                      timed(c.delete_us_per_sub, "%.3f"), timed(c.match_ns_per_event, "%.1f")});
    }
    print_csv(out, rows);
  } else {
    // Cells across columns, one metric per row.
    std::vector<std::vector<std::string>> rows(10);
    rows[0] = {"n"};
    rows[1] = {"d"};
    rows[2] = {"g"};
    rows[3] = {"labels inserted"};
    rows[4] = {"forwarded labels"};
    rows[5] = {"distinct forwarded"};
    rows[6] = {"saturation events"};
    rows[7] = {"insert us/sub"};
    rows[8] = {"delete us/sub"};
    rows[9] = {"match ns/event"};
    for (const auto& c : cells) {
      rows[0].push_back(std::to_string(c.n_subscriptions));
      rows[1].push_back(std::to_string(c.dims));
      rows[2].push_back(std::to_string(c.granule));
      rows[3].push_back(std::to_string(c.labels_inserted));
      rows[4].push_back(std::to_string(c.forwarded_labels));
      rows[5].push_back(std::to_string(c.distinct_forwarded));
      rows[6].push_back(std::to_string(c.saturation_events));
      rows[7].push_back(timed(c.insert_us_per_sub, "%.3f"));
      rows[8].push_back(timed(c.delete_us_per_sub, "%.3f"));
      rows[9].push_back(timed(c.match_ns_per_event, "%.1f"));
    }
    print_table(out, rows);
  }
  return cells;
}

std::vector<FprRow> cmd_fpr(const FprConfig& config, std::ostream& out) {
  ContentSchema base;
  std::vector<Subscription> subs;
  std::vector<EventPoint> events;
  if (!config.workload_path.empty()) {
    auto w = load_workload(config.workload_path);
    base = std::move(w.schema);
    subs = std::move(w.subscriptions);
    events = std::move(w.events);
  } else {
    base = config.schema.load();
    subs = gen_subscriptions(config.workload, base);
    events = gen_events(config.workload, base);
  }

  std::vector<FprRow> rows;
  if (config.granule_sweep) {
    for (auto g : config.granules) {
      const auto schema = rebits(base, granule_bits(g));
      rows.push_back({"granule", g, config.cbf.m,
                      measure_fpr(schema, subs, events, config.cbf, config.options)});
    }
  }
  if (config.m_sweep) {
    const auto schema = rebits(base, granule_bits(config.schema.granule));
    for (auto m : config.m_values) {
      CBFParams p = config.cbf;
      p.m = m;
      rows.push_back({"m", config.schema.granule, m,
                      measure_fpr(schema, subs, events, p, config.options)});
    }
  }

  if (config.format == OutputFormat::Csv) {
    std::vector<std::vector<std::string>> t{{"sweep", "granule", "m", "clients", "decisions",
                                             "mapping_fpr", "cbf_fpr", "total_fpr",
                                             "false_negatives"}};
    for (const auto& r : rows) {
      t.push_back({r.sweep, std::to_string(r.granule), std::to_string(r.m),
                   std::to_string(r.report.clients), std::to_string(r.report.decisions),
                   fmt("%.8f", r.report.mapping_fpr), fmt("%.8f", r.report.cbf_fpr),
                   fmt("%.8f", r.report.total_fpr), std::to_string(r.report.false_negatives)});
    }
    print_csv(out, t);
  } else {
    std::vector<std::vector<std::string>> t{
        {"sweep", "g", "m", "mapping %", "cbf %", "total %", "FN"}};
    for (const auto& r : rows) {
      t.push_back({r.sweep, std::to_string(r.granule), std::to_string(r.m),
                   fmt("%.4f", 100.0 * r.report.mapping_fpr), fmt("%.4f", 100.0 * r.report.cbf_fpr),
                   fmt("%.4f", 100.0 * r.report.total_fpr), std::to_string(r.report.false_negatives)});
    }
    print_table(out, t);
  }
  return rows;
}

SimResult cmd_sim(const SimConfig& config, std::ostream& out) {
  Topology topology = !config.topology_path.empty() ? topology_from_json(read_file(config.topology_path))
                      : config.topology                ? *config.topology
                                                       : throw Error(ErrorCode::InvalidArgument,
                                                                     "sim needs a topology");
  Workload workload = !config.workload_path.empty() ? load_workload(config.workload_path)
                      : config.workload              ? *config.workload
                                                     : throw Error(ErrorCode::InvalidArgument,
                                                                   "sim needs a workload");
  const auto& schema = workload.schema;
  Simulator sim(topology, schema.label_bytes());

  std::vector<ClientId> clients;
  for (auto [c, b] : topology.clients) clients.push_back(c);
  if (clients.empty() && (!workload.subscriptions.empty() || !workload.events.empty())) {
    throw Error(ErrorCode::InvalidTopology, "topology has no clients");
  }
  std::vector<ClientSubscription> subs;
  subs.reserve(workload.subscriptions.size());
  for (std::size_t i = 0; i < workload.subscriptions.size(); ++i) {
    subs.push_back({clients[i % clients.size()], workload.subscriptions[i]});
  }
  std::vector<ClientEvent> events;
  events.reserve(workload.events.size());
  for (std::size_t i = 0; i < workload.events.size(); ++i) {
    events.push_back({clients[(i + 1) % clients.size()], workload.events[i]});
  }

  inject_subscriptions(sim, schema, config.app_id, subs);
  SimResult result;
  result.report = end_to_end_check(sim, schema, config.app_id, subs, events);
  result.metrics = sim.metrics();
  result.saturation_events = sim.saturation_events();
  result.underflow_events = sim.underflow_events();
  const bool fn = result.report.false_negatives > 0;
  result.exit_code = (config.negative_control ? fn : !fn) ? 0 : 1;

  if (!config.trace_out.empty()) {
    Sink sink(config.trace_out, out);
    write_traces(sink.get(), sim.traces());
  }

  std::vector<std::pair<std::string, std::string>> kv{
      {"brokers", std::to_string(topology.brokers.size())},
      {"clients", std::to_string(clients.size())},
      {"subscriptions", std::to_string(subs.size())},
      {"events", std::to_string(result.report.events)},
      {"deliveries", std::to_string(result.report.deliveries)},
      {"true_deliveries", std::to_string(result.report.true_deliveries)},
      {"false_negatives", std::to_string(result.report.false_negatives)},
      {"mapping_fps", std::to_string(result.report.mapping_fps)},
      {"cbf_fps", std::to_string(result.report.cbf_fps)},
      {"distinct_forwarded_labels", std::to_string(result.metrics.distinct_forwarded_labels)},
      {"link_messages", std::to_string(result.metrics.link_messages)},
      {"wire_bytes", std::to_string(result.metrics.wire_bytes)},
      {"steps", std::to_string(result.metrics.steps)},
  };
  for (const auto& l : result.metrics.links) {
    const auto key = "link " + std::to_string(l.from) + "->" + std::to_string(l.to);
    kv.emplace_back(key + " subscribe_labels", std::to_string(l.subscribe_labels));
    kv.emplace_back(key + " distinct_labels", std::to_string(l.distinct_subscribe_labels));
    kv.emplace_back(key + " unsubscribe_labels", std::to_string(l.unsubscribe_labels));
    kv.emplace_back(key + " publishes", std::to_string(l.publishes));
  }
  kv.emplace_back("saturation_events", std::to_string(result.saturation_events));
  kv.emplace_back("underflow_events", std::to_string(result.underflow_events));
  std::string status;
  if (config.negative_control) {
    status = fn ? "ok (negative control produced false negatives)"
                : "FAIL (negative control produced no false negatives)";
  } else {
    status = fn ? "FAIL (false negatives)" : "ok";
  }
  kv.emplace_back("status", status);

  if (config.format == OutputFormat::Csv) {
    out << "key,value\n";
    for (const auto& [k, v] : kv) out << k << ',' << v << '\n';
  } else {
    for (const auto& [k, v] : kv) out << k << ": " << v << '\n';
  }
  return result;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DLS content-based publish/subscribe toolkit"};
  app.require_subcommand(1);

  SchemaSource schema;
  WorkloadSpec workload;
  CBFParams cbf;
  cbf.m = 1u << 16;
  std::string dist = "uniform";
  std::string format = "text";
  std::string out_path;
  std::uint64_t max_len = 0;

  auto add_schema = [&](CLI::App* cmd) {
    cmd->add_option("--schema", schema.path, "Schema JSON file");
    cmd->add_option("--dims", schema.dims, "Number of numeric dimensions")->capture_default_str();
    cmd->add_option("--lower", schema.lower, "Domain lower bound")->capture_default_str();
    cmd->add_option("--upper", schema.upper, "Domain upper bound")->capture_default_str();
  };
  auto add_workload = [&](CLI::App* cmd) {
    cmd->add_option("--dist", dist, "uniform or zipf")->capture_default_str();
    cmd->add_option("--zipf-s", workload.zipf_s, "Zipf exponent")->capture_default_str();
    cmd->add_option("--n-events", workload.n_events, "Number of events")->capture_default_str();
    cmd->add_option("--seed", workload.seed, "Random seed")->capture_default_str();
    cmd->add_option("--max-len", max_len, "Maximum interval length (default width/8)");
  };
  auto add_cbf = [&](CLI::App* cmd) {
    cmd->add_option("--m-bits", cbf.m, "Counters per filter")->capture_default_str();
    cmd->add_option("--k-hash", cbf.k_hash, "Hash functions")->capture_default_str();
    cmd->add_option("--counter-bits", cbf.counter_bits, "Bits per counter")->capture_default_str();
    cmd->add_option("--seed-a", cbf.seed_a, "First hash seed");
    cmd->add_option("--seed-b", cbf.seed_b, "Second hash seed");
  };
  auto add_output = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "Output file (default stdout)");
    cmd->add_option("--format", format, "text or csv")->capture_default_str();
  };

  auto* gen = app.add_subcommand("gen", "Generate a workload file");
  add_schema(gen);
  gen->add_option("--granule", schema.granule, "Granules per dimension")->capture_default_str();
  add_workload(gen);
  gen->add_option("--n-subs", workload.n_subscriptions, "Number of subscriptions");
  gen->add_option("--out", out_path, "Workload file (default stdout)");

  BenchConfig bench_cfg;
  auto* bench = app.add_subcommand("bench", "Single-broker insertion, matching and forwarding");
  add_schema(bench);
  add_workload(bench);
  add_cbf(bench);
  add_output(bench);
  bench->add_option("--workload", bench_cfg.workload_path, "Workload file");
  bench->add_option("--granule", bench_cfg.granules, "Granule values")->delimiter(',');
  bench->add_option("--n-subs", bench_cfg.n_subscriptions, "Subscription counts")->delimiter(',');
  bench->add_option("--clients", bench_cfg.options.clients, "Subscriber clients")
      ->capture_default_str();
  bench->add_option("--delete-sample", bench_cfg.options.delete_sample,
                    "Subscriptions removed for the deletion timer")
      ->capture_default_str();
  bench->add_option("--repeats", bench_cfg.options.match_repeats, "Matching timer repetitions")
      ->capture_default_str();
  bool no_timing = false;
  bench->add_flag("--no-timing", no_timing, "Omit wall-clock columns");

  FprConfig fpr_cfg;
  std::string sweep = "both";
  auto* fpr = app.add_subcommand("fpr", "False-positive sweeps over granules and filter size");
  add_schema(fpr);
  add_workload(fpr);
  add_cbf(fpr);
  add_output(fpr);
  fpr->add_option("--workload", fpr_cfg.workload_path, "Workload file");
  fpr->add_option("--granule", schema.granule, "Granules for the m sweep")->capture_default_str();
  fpr->add_option("--n-subs", workload.n_subscriptions, "Number of subscriptions");
  fpr->add_option("--granules", fpr_cfg.granules, "Granule sweep values")->delimiter(',');
  fpr->add_option("--m-values", fpr_cfg.m_values, "Filter size sweep values")->delimiter(',');
  fpr->add_option("--sweep", sweep, "granule, m or both")->capture_default_str();
  fpr->add_option("--subs-per-client", fpr_cfg.options.subscriptions_per_client,
                  "Subscriptions aggregated per subscriber client")
      ->capture_default_str();

  SimConfig sim_cfg;
  auto* sim = app.add_subcommand("sim", "Overlay simulation with a false-negative check");
  add_schema(sim);
  add_workload(sim);
  add_output(sim);
  sim->add_option("--granule", schema.granule, "Granules per dimension")->capture_default_str();
  sim->add_option("--n-subs", workload.n_subscriptions, "Number of subscriptions");
  sim->add_option("--topology", sim_cfg.topology_path, "Topology JSON file")->required();
  sim->add_option("--workload", sim_cfg.workload_path, "Workload file");
  sim->add_option("--trace", sim_cfg.trace_out, "Trace output file");
  sim->add_flag("--negative-control", sim_cfg.negative_control,
                "Expect false negatives (mismatched filter parameters)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    workload.distribution = parse_distribution(dist);
    const auto fmt_value = parse_format(format);
    auto fill_len = [&](const ContentSchema& s) {
      if (max_len > 0) workload.max_interval_len.assign(s.size(), max_len);
    };
    Sink sink(gen->parsed() ? std::string() : out_path, out);

    if (gen->parsed()) {
      fill_len(schema.load());
      // With the workload on stdout the summary goes to stderr.
      cmd_gen(GenConfig{schema, workload, out_path}, out_path.empty() ? err : out, out);
    } else if (bench->parsed()) {
      cbf.validate();
      fill_len(schema.load());
      bench_cfg.schema = schema;
      bench_cfg.workload = workload;
      bench_cfg.cbf = cbf;
      bench_cfg.options.timing = !no_timing;
      bench_cfg.format = fmt_value;
      cmd_bench(bench_cfg, sink.get());
    } else if (fpr->parsed()) {
      cbf.validate();
      fill_len(schema.load());
      if (sweep != "both" && sweep != "granule" && sweep != "m") {
        throw Error(ErrorCode::InvalidArgument, "sweep must be granule, m or both");
      }
      fpr_cfg.schema = schema;
      fpr_cfg.workload = workload;
      fpr_cfg.cbf = cbf;
      fpr_cfg.granule_sweep = sweep != "m";
      fpr_cfg.m_sweep = sweep != "granule";
      fpr_cfg.format = fmt_value;
      cmd_fpr(fpr_cfg, sink.get());
    } else if (sim->parsed()) {
      if (sim_cfg.workload_path.empty()) {
        Workload w;
        w.schema = schema.load();
        fill_len(w.schema);
        w.seed = workload.seed;
        w.distribution = workload.distribution;
        w.zipf_s = workload.zipf_s;
        w.subscriptions = gen_subscriptions(workload, w.schema);
        w.events = gen_events(workload, w.schema);
        sim_cfg.workload = std::move(w);
      }
      sim_cfg.format = fmt_value;
      return cmd_sim(sim_cfg, sink.get()).exit_code;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace dls
