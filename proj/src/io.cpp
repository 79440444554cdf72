#include "dls/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dls/error.hpp"

namespace dls {

using nlohmann::json;

namespace {

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

// Runs `fn`, turning JSON type and key errors into ParseError.
template <class Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

json params_json(const CBFParams& p) {
  return json{{"m", p.m},
              {"k_hash", p.k_hash},
              {"counter_bits", p.counter_bits},
              {"seed_a", p.seed_a},
              {"seed_b", p.seed_b}};
}

CBFParams params_from(const json& j) {
  CBFParams p;
  p.m = j.value("m", p.m);
  p.k_hash = j.value("k_hash", p.k_hash);
  p.counter_bits = j.value("counter_bits", p.counter_bits);
  p.seed_a = j.value("seed_a", p.seed_a);
  p.seed_b = j.value("seed_b", p.seed_b);
  p.validate();
  return p;
}

json schema_json(const ContentSchema& schema) {
  json dims = json::array();
  for (const auto& d : schema.dims()) {
    json jd{{"name", d.name}, {"bits", d.bits}};
    if (d.kind == DimensionKind::NumericRange) {
      jd["kind"] = "numeric";
      jd["lower"] = d.lower;
      jd["upper"] = d.upper;
    } else {
      jd["kind"] = "discrete";
      jd["values"] = d.values;
    }
    dims.push_back(std::move(jd));
  }
  return json{{"app_id_bits", schema.app_id_bits()}, {"dimensions", std::move(dims)}};
}

ContentSchema schema_from(const json& j) {
  std::vector<DimensionSpec> dims;
  for (const auto& jd : j.at("dimensions")) {
    const auto kind = jd.value("kind", std::string("numeric"));
    const auto name = jd.at("name").get<std::string>();
    const auto bits = jd.at("bits").get<unsigned>();
    if (kind == "numeric") {
      dims.push_back(DimensionSpec::numeric(name, jd.at("lower").get<std::int64_t>(),
                                            jd.at("upper").get<std::int64_t>(), bits));
    } else if (kind == "discrete") {
      dims.push_back(DimensionSpec::discrete(name, jd.at("values").get<std::vector<std::int64_t>>(),
                                             bits));
    } else {
      throw Error(ErrorCode::ParseError, "dimension '" + name + "': unknown kind '" + kind + "'");
    }
  }
  return ContentSchema(std::move(dims), j.value("app_id_bits", 0u));
}

std::int64_t parse_int(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string schema_to_json(const ContentSchema& schema, int indent) {
  return schema_json(schema).dump(indent);
}

ContentSchema schema_from_json(std::string_view text) {
  const auto j = parse_json(text, "schema");
  return guarded("schema", [&] { return schema_from(j); });
}

std::string cbf_params_to_json(const CBFParams& params) { return params_json(params).dump(); }

CBFParams cbf_params_from_json(std::string_view text) {
  const auto j = parse_json(text, "cbf params");
  return guarded("cbf params", [&] { return params_from(j); });
}

std::string topology_to_json(const Topology& t, int indent) {
  json links = json::array();
  for (auto [a, b] : t.links) links.push_back({a, b});
  json clients = json::array();
  for (auto [c, b] : t.clients) clients.push_back({c, b});
  json j{{"brokers", t.brokers}, {"links", links}, {"clients", clients}, {"cbf", params_json(t.cbf)}};
  if (!t.overrides.empty()) {
    json o = json::object();
    for (const auto& [b, p] : t.overrides) o[std::to_string(b)] = params_json(p);
    j["overrides"] = std::move(o);
  }
  if (t.allow_params_mismatch) j["allow_params_mismatch"] = true;
  return j.dump(indent);
}

Topology topology_from_json(std::string_view text) {
  const auto j = parse_json(text, "topology");
  Topology t = guarded("topology", [&] {
    Topology t;
    t.brokers = j.at("brokers").get<std::vector<BrokerId>>();
    for (const auto& l : j.value("links", json::array())) {
      t.links.emplace_back(l.at(0).get<BrokerId>(), l.at(1).get<BrokerId>());
    }
    for (const auto& c : j.value("clients", json::array())) {
      t.clients.emplace_back(c.at(0).get<ClientId>(), c.at(1).get<BrokerId>());
    }
    if (j.contains("cbf")) t.cbf = params_from(j.at("cbf"));
    if (j.contains("overrides")) {
      for (const auto& [key, value] : j.at("overrides").items()) {
        t.overrides[static_cast<BrokerId>(parse_int(key, 0))] = params_from(value);
      }
    }
    t.allow_params_mismatch = j.value("allow_params_mismatch", false);
    return t;
  });
  validate_topology(t);
  return t;
}

void write_workload(std::ostream& out, const Workload& w) {
  char zbuf[32];
  std::snprintf(zbuf, sizeof zbuf, "%.17g", w.zipf_s);
  out << "# dls-workload 1\n";
  out << "# seed " << w.seed << '\n';
  out << "# distribution " << to_string(w.distribution);
  if (w.distribution == Distribution::Zipf) out << ' ' << zbuf;
  out << '\n';
  out << "# schema " << schema_to_json(w.schema) << '\n';
  const auto& schema = w.schema;
  for (const auto& sub : w.subscriptions) {
    if (sub.predicates.size() != schema.size()) {
      throw Error(ErrorCode::InvalidSubscription, "workload subscriptions must constrain every dimension");
    }
    out << 'S';
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const auto& p = sub.predicates[i];
      if (p.attr != schema.dim(i).name) {
        throw Error(ErrorCode::InvalidSubscription, "predicate order differs from the schema");
      }
      out << '\t';
      if (p.type == ValueType::Discrete) {
        for (std::size_t k = 0; k < p.values.size(); ++k) out << (k ? "," : "") << p.values[k];
      } else {
        if (!p.low || !p.high) {
          throw Error(ErrorCode::InvalidSubscription, "workload ranges must be two-sided");
        }
        out << *p.low << ':' << *p.high;
      }
    }
    out << '\n';
  }
  for (const auto& e : w.events) {
    out << 'E';
    for (auto v : e.values) out << '\t' << v;
    out << '\n';
  }
}

Workload read_workload(std::istream& in) {
  Workload w;
  bool have_schema = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "seed") {
        if (!(hs >> w.seed)) throw Error(ErrorCode::ParseError, "bad seed header");
      } else if (key == "distribution") {
        std::string name;
        hs >> name;
        w.distribution = parse_distribution(name);
        if (w.distribution == Distribution::Zipf && !(hs >> w.zipf_s)) w.zipf_s = 1.0;
      } else if (key == "schema") {
        std::string rest;
        std::getline(hs, rest);
        w.schema = schema_from_json(rest);
        have_schema = true;
      }
      continue;
    }
    if (!have_schema) throw Error(ErrorCode::ParseError, "workload record before the schema header");
    const auto fields = split(line, '\t');
    const auto& schema = w.schema;
    if (fields.size() != schema.size() + 1) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected " +
                                             std::to_string(schema.size()) + " fields");
    }
    if (fields[0] == "S") {
      Subscription sub;
      for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto& dim = schema.dim(i);
        const auto f = fields[i + 1];
        if (dim.kind == DimensionKind::DiscreteSet) {
          std::vector<std::int64_t> values;
          for (auto v : split(f, ',')) values.push_back(parse_int(v, lineno));
          sub.predicates.push_back(Predicate::one_of(dim.name, std::move(values)));
        } else {
          const auto colon = f.find(':', 1);
          if (colon == std::string_view::npos) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected lo:hi");
          }
          sub.predicates.push_back(Predicate::range(dim.name, parse_int(f.substr(0, colon), lineno),
                                                    parse_int(f.substr(colon + 1), lineno)));
        }
      }
      w.subscriptions.push_back(std::move(sub));
    } else if (fields[0] == "E") {
      EventPoint e;
      for (std::size_t i = 0; i < schema.size(); ++i) e.values.push_back(parse_int(fields[i + 1], lineno));
      w.events.push_back(std::move(e));
    } else {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": unknown record type");
    }
  }
  if (!have_schema) throw Error(ErrorCode::ParseError, "workload has no schema header");
  return w;
}

std::string format_trace_record(const TraceRecord& r) {
  char hex[24];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.label.bits));
  std::string out = hex;
  out += '\t';
  out += std::to_string(r.publisher);
  out += '\t';
  if (r.delivered.empty()) out += '-';
  for (std::size_t i = 0; i < r.delivered.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(r.delivered[i]);
  }
  out += '\t';
  for (std::size_t i = 0; i < r.path.size(); ++i) {
    if (i) out += '>';
    out += std::to_string(r.path[i]);
  }
  return out;
}

void write_traces(std::ostream& out, const std::vector<TraceRecord>& traces) {
  for (const auto& r : traces) out << format_trace_record(r) << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace dls
