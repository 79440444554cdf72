#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dls/broker.hpp"
#include "dls/cbf.hpp"
#include "dls/cli.hpp"
#include "dls/error.hpp"
#include "dls/harness.hpp"
#include "dls/io.hpp"
#include "dls/label_space.hpp"
#include "dls/overlay.hpp"

namespace py = pybind11;
using namespace dls;

namespace {

std::vector<std::uint64_t> label_bits(const LabelSet& labels) {
  std::vector<std::uint64_t> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(l.bits);
  return out;
}

// Subscriptions cross the boundary as {attr: (lo, hi)} or {attr: [values]}.
Subscription to_subscription(const py::dict& d) {
  Subscription sub;
  for (auto item : d) {
    const auto attr = py::cast<std::string>(item.first);
    if (py::isinstance<py::tuple>(item.second)) {
      const auto t = py::cast<py::tuple>(item.second);
      if (t.size() != 2) throw Error(ErrorCode::InvalidSubscription, attr + ": expected (lo, hi)");
      const bool has_lo = !t[0].is_none();
      const bool has_hi = !t[1].is_none();
      if (has_lo && has_hi) {
        sub.predicates.push_back(Predicate::range(attr, py::cast<std::int64_t>(t[0]),
                                                  py::cast<std::int64_t>(t[1])));
      } else if (has_lo) {
        sub.predicates.push_back(Predicate::at_least(attr, py::cast<std::int64_t>(t[0])));
      } else if (has_hi) {
        sub.predicates.push_back(Predicate::at_most(attr, py::cast<std::int64_t>(t[1])));
      }
    } else {
      sub.predicates.push_back(
          Predicate::one_of(attr, py::cast<std::vector<std::int64_t>>(item.second)));
    }
  }
  return sub;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "DLS content-based publish/subscribe core";

  auto base = py::register_exception<Error>(m, "DlsError", PyExc_ValueError);
  (void)base;

  py::class_<ContentSchema>(m, "ContentSchema")
      .def_static("uniform", &ContentSchema::uniform, py::arg("dims"), py::arg("lower"),
                  py::arg("upper"), py::arg("bits"))
      .def_static("from_json", [](const std::string& s) { return schema_from_json(s); })
      .def("to_json", [](const ContentSchema& s) { return schema_to_json(s); })
      .def_property_readonly("size", &ContentSchema::size)
      .def_property_readonly("label_bits", &ContentSchema::label_bits)
      .def_property_readonly("total_ranges", &ContentSchema::total_ranges)
      .def("dim_names", [](const ContentSchema& s) {
        std::vector<std::string> names;
        for (const auto& d : s.dims()) names.push_back(d.name);
        return names;
      });

  m.def("event_label",
        [](const ContentSchema& s, std::vector<std::int64_t> values, std::uint64_t app_id) {
          return event_to_label(s, app_id, EventPoint{std::move(values)}).bits;
        },
        py::arg("schema"), py::arg("values"), py::arg("app_id") = 0);
  m.def("subscription_labels",
        [](const ContentSchema& s, const py::dict& sub, std::uint64_t app_id, std::size_t cap) {
          return label_bits(subscription_to_labels(s, app_id, to_subscription(sub), cap));
        },
        py::arg("schema"), py::arg("subscription"), py::arg("app_id") = 0,
        py::arg("cap") = kDefaultLabelCap);
  m.def("decode_label", [](const ContentSchema& s, std::uint64_t bits) {
    const auto d = decode_label(s, RangeLabel{bits});
    return py::make_tuple(d.app_id, d.indices);
  });
  m.def("evaluate", [](const ContentSchema& s, const py::dict& sub, std::vector<std::int64_t> v) {
    return evaluate(s, to_subscription(sub), EventPoint{std::move(v)});
  });

  py::class_<CBFParams>(m, "CBFParams")
      .def(py::init([](std::uint32_t m_, std::uint32_t k, std::uint32_t bits, std::uint64_t a,
                       std::uint64_t b) {
             CBFParams p{m_, k, bits, a, b};
             p.validate();
             return p;
           }),
           py::arg("m") = 1024, py::arg("k_hash") = 4, py::arg("counter_bits") = 4,
           py::arg("seed_a") = CBFParams{}.seed_a, py::arg("seed_b") = CBFParams{}.seed_b)
      .def_readonly("m", &CBFParams::m)
      .def_readonly("k_hash", &CBFParams::k_hash)
      .def_readonly("counter_bits", &CBFParams::counter_bits)
      .def_readonly("seed_a", &CBFParams::seed_a)
      .def_readonly("seed_b", &CBFParams::seed_b)
      .def("__eq__", [](const CBFParams& a, const CBFParams& b) { return a == b; });

  py::class_<CountingBloomFilter>(m, "CountingBloomFilter")
      .def(py::init<const CBFParams&>())
      .def("add", [](CountingBloomFilter& f, std::uint64_t l) { f.add(RangeLabel{l}); })
      .def("remove", [](CountingBloomFilter& f, std::uint64_t l) { f.remove(RangeLabel{l}); })
      .def("query", [](const CountingBloomFilter& f, std::uint64_t l) { return f.query(RangeLabel{l}); })
      .def("__contains__",
           [](const CountingBloomFilter& f, std::uint64_t l) { return f.contains(RangeLabel{l}); })
      .def("serialize", [](const CountingBloomFilter& f) {
        const auto bytes = f.serialize();
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      })
      .def_static("deserialize",
                  [](const py::bytes& b) {
                    const std::string s = b;
                    return CountingBloomFilter::deserialize(std::span<const std::uint8_t>(
                        reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
                  })
      .def_property_readonly("params", &CountingBloomFilter::params)
      .def_property_readonly("saturation_events", &CountingBloomFilter::saturation_events)
      .def_property_readonly("underflow_events", &CountingBloomFilter::underflow_events)
      .def("empty", &CountingBloomFilter::empty);

  m.def("theoretical_fpr_exact", &theoretical_fpr_exact, py::arg("m"), py::arg("n"), py::arg("k"));
  m.def("theoretical_fpr_approx", &theoretical_fpr_approx, py::arg("m"), py::arg("n"), py::arg("k"));

  m.def("measure_fpr",
        [](const ContentSchema& schema, const std::string& dist, std::size_t n_subs,
           std::size_t n_events, std::uint64_t seed, const CBFParams& params, double zipf_s,
           std::size_t per_client) {
          WorkloadSpec spec;
          spec.distribution = parse_distribution(dist);
          spec.zipf_s = zipf_s;
          spec.n_subscriptions = n_subs;
          spec.n_events = n_events;
          spec.seed = seed;
          FprOptions opt;
          opt.subscriptions_per_client = per_client;
          const auto r = measure_fpr(schema, gen_subscriptions(spec, schema),
                                     gen_events(spec, schema), params, opt);
          py::dict d;
          d["mapping_fpr"] = r.mapping_fpr;
          d["cbf_fpr"] = r.cbf_fpr;
          d["total_fpr"] = r.total_fpr;
          d["false_negatives"] = r.false_negatives;
          d["decisions"] = r.decisions;
          return d;
        },
        py::arg("schema"), py::arg("distribution"), py::arg("n_subscriptions"),
        py::arg("n_events"), py::arg("seed"), py::arg("params"), py::arg("zipf_s") = 1.0,
        py::arg("subscriptions_per_client") = FprOptions{}.subscriptions_per_client);

  py::class_<Simulator>(m, "Simulator")
      .def(py::init([](std::size_t brokers, std::size_t clients_per_broker, const CBFParams& p,
                       std::size_t label_width) {
             return Simulator(chain_topology(brokers, clients_per_broker, p), label_width);
           }),
           py::arg("brokers"), py::arg("clients_per_broker"), py::arg("params"),
           py::arg("label_width") = 8)
      .def_static("from_json",
                  [](const std::string& text, std::size_t w) {
                    return Simulator(topology_from_json(text), w);
                  },
                  py::arg("topology"), py::arg("label_width") = 8)
      .def("subscribe",
           [](Simulator& s, ClientId c, std::vector<std::uint64_t> labels) {
             LabelSet ls;
             for (auto b : labels) ls.push_back(RangeLabel{b});
             s.inject(c, MsgKind::Subscribe, std::move(ls));
           })
      .def("unsubscribe",
           [](Simulator& s, ClientId c, std::vector<std::uint64_t> labels) {
             LabelSet ls;
             for (auto b : labels) ls.push_back(RangeLabel{b});
             s.inject(c, MsgKind::Unsubscribe, std::move(ls));
           })
      .def("publish",
           [](Simulator& s, ClientId c, std::uint64_t label) {
             s.inject(c, MsgKind::Publish, {RangeLabel{label}});
           })
      .def("run", [](Simulator& s) { return s.run_to_quiescence().steps; })
      .def("traces",
           [](const Simulator& s) {
             py::list out;
             for (const auto& t : s.traces()) {
               out.append(py::make_tuple(t.label.bits, t.publisher, t.delivered, t.path));
             }
             return out;
           })
      .def_property_readonly("distinct_forwarded_labels",
                             [](const Simulator& s) { return s.metrics().distinct_forwarded_labels; })
      .def_property_readonly("saturation_events", &Simulator::saturation_events);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
