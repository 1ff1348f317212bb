#include "ivnsim/andl.hpp"
#include "ivnsim/cli.hpp"
#include "ivnsim/config.hpp"
#include "ivnsim/error.hpp"
#include "ivnsim/metrics.hpp"
#include "ivnsim/simulation.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace ivnsim;

namespace {

SimTime time_arg(const py::handle& v, const char* what)
{
    if (py::isinstance<py::str>(v)) {
        const auto s = v.cast<std::string>();
        if (auto t = parse_time(s)) {
            return *t;
        }
        throw InvalidArgument(std::string(what) + ": cannot parse time '" + s + "'");
    }
    return SimTime::from_ticks(v.cast<std::int64_t>());
}

using Overrides = std::vector<std::pair<std::string, std::string>>;

Overrides overrides_arg(const std::optional<std::map<std::string, std::string>>& o)
{
    Overrides out;
    if (o) {
        out.assign(o->begin(), o->end());
    }
    return out;
}

py::list diag_list(const Diagnostics& d)
{
    py::list out;
    for (const auto& i : d.items()) {
        py::dict e;
        e["severity"] = i.severity == Diagnostic::Severity::Error ? "error" : "warning";
        e["message"] = i.message;
        e["line"] = i.pos.line;
        e["column"] = i.pos.column;
        e["file"] = i.pos.file;
        out.append(e);
    }
    return out;
}

[[noreturn]] void raise_diags(const Diagnostics& d, const std::vector<std::string>& names)
{
    throw ConfigError(d.format(names));
}

NetworkConfig compile_source(const std::string& text, const std::string& network, const Overrides& overrides)
{
    Diagnostics d;
    andl::CompileOptions o;
    o.network = network;
    o.overrides = overrides;
    auto cfg = andl::compile_text(text, o, d);
    if (d.has_errors()) {
        raise_diags(d, {"<text>"});
    }
    return cfg;
}

NetworkConfig load_files(const std::vector<std::string>& files, const std::string& network,
                         const Overrides& overrides)
{
    Diagnostics d;
    auto cfg = cli::load_scenario(files, cli::LoadOptions{network, overrides}, d);
    if (d.has_errors()) {
        raise_diags(d, files);
    }
    return cfg;
}

py::dict report_dict(const Simulation& sim)
{
    const auto& r = sim.report();
    py::dict out;
    out["events"] = r.kernel.events_dispatched;
    out["final_time_ps"] = r.kernel.final_time.ticks();
    out["unknown_destination"] = r.unknown_destination;
    out["no_route"] = r.no_route;
    out["tt_violations"] = r.tt_violations;
    out["trace_hash"] = r.trace_hash;
    py::dict msgs;
    for (const auto& m : r.messages) {
        py::dict e;
        e["released"] = m.released;
        e["delivered"] = m.delivered;
        e["dropped"] = m.dropped;
        e["min_latency_ps"] = m.min_latency ? py::cast(m.min_latency->ticks()) : py::none();
        e["max_latency_ps"] = m.max_latency ? py::cast(m.max_latency->ticks()) : py::none();
        msgs[py::str(m.name)] = e;
    }
    out["messages"] = msgs;
    py::dict segs;
    for (const auto& s : r.segments) {
        py::dict e;
        e["frames_sent"] = s.frames_sent;
        e["frames_received"] = s.frames_received;
        e["frames_dropped"] = s.frames_dropped;
        e["bits_sent"] = s.bits_sent;
        segs[py::str(s.name)] = e;
    }
    out["segments"] = segs;
    return out;
}

} // namespace

PYBIND11_MODULE(_ivnsim, m)
{
    m.doc() = "Discrete-event simulator for mixed CAN / Ethernet in-vehicle networks";

    auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<InternalConsistency>(m, "InternalConsistency", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    py::class_<NetworkConfig>(m, "Config")
        .def_readonly("network", &NetworkConfig::network)
        .def_property_readonly("devices",
                               [](const NetworkConfig& c) {
                                   std::vector<std::pair<std::string, std::string>> out;
                                   for (const auto& d : c.devices) {
                                       out.emplace_back(d.name, std::string(to_string(d.kind)));
                                   }
                                   return out;
                               })
        .def_property_readonly("links",
                               [](const NetworkConfig& c) {
                                   std::vector<std::tuple<std::string, std::string, std::string>> out;
                                   for (const auto& l : c.links) {
                                       out.emplace_back(l.name, l.a, l.b);
                                   }
                                   return out;
                               })
        .def_property_readonly("buses",
                               [](const NetworkConfig& c) {
                                   std::vector<std::string> out;
                                   for (const auto& b : c.buses) {
                                       out.push_back(b.name);
                                   }
                                   return out;
                               })
        .def_property_readonly("messages",
                               [](const NetworkConfig& c) {
                                   std::vector<std::string> out;
                                   for (const auto& x : c.messages) {
                                       out.push_back(x.name);
                                   }
                                   return out;
                               })
        .def("to_json", [](const NetworkConfig& c) { return to_json(c); });

    m.def(
        "compile",
        [](const std::string& text, const std::string& network,
           const std::optional<std::map<std::string, std::string>>& overrides) {
            return compile_source(text, network, overrides_arg(overrides));
        },
        py::arg("text"), py::arg("network") = "", py::arg("overrides") = py::none(),
        "Compile ANDL source text; raises ConfigError on diagnostics errors.");
    m.def(
        "load",
        [](const std::vector<std::string>& files, const std::string& network,
           const std::optional<std::map<std::string, std::string>>& overrides) {
            return load_files(files, network, overrides_arg(overrides));
        },
        py::arg("files"), py::arg("network") = "", py::arg("overrides") = py::none(),
        "Load ANDL files (merged in order) or one config .json.");
    m.def(
        "from_json",
        [](const std::string& text) {
            Diagnostics d;
            auto cfg = config_from_json(text, d);
            if (d.has_errors()) {
                raise_diags(d, {"<json>"});
            }
            return cfg;
        },
        py::arg("text"));
    m.def(
        "validate",
        [](const std::string& text) {
            Diagnostics d;
            const auto f = andl::parse(text, d);
            if (!d.has_errors()) {
                d.append(andl::validate(f));
            }
            return diag_list(d);
        },
        py::arg("text"), "Syntax, lowering and derivation diagnostics as a list of dicts.");

    py::class_<Simulation>(m, "Simulation")
        .def(py::init([](const NetworkConfig& cfg, const py::object& horizon, std::uint64_t seed, bool drain,
                         bool keep_traces, bool trace_events) {
                 RunOptions o;
                 o.horizon = time_arg(horizon, "horizon");
                 o.seed = seed;
                 o.drain = drain;
                 o.keep_traces = keep_traces;
                 o.trace_events = trace_events;
                 return std::make_unique<Simulation>(cfg, o);
             }),
             py::arg("config"), py::arg("horizon") = "1s", py::arg("seed") = 0, py::arg("drain") = true,
             py::arg("keep_traces") = false, py::arg("trace_events") = false)
        .def(
            "run",
            [](Simulation& s) {
                py::gil_scoped_release release;
                s.run();
            },
            "Run to the horizon; may be called once.")
        .def_property_readonly("report", &report_dict)
        .def("format_report", [](const Simulation& s) { return format_report(s.config(), s.report()); })
        .def(
            "latencies",
            [](const Simulation& s, const std::string& message, const std::string& sink) {
                std::vector<std::pair<std::int64_t, std::int64_t>> out;
                for (const auto& x : s.samples_for(message, sink)) {
                    out.emplace_back(x.creation_time.ticks(), x.latency().ticks());
                }
                return out;
            },
            py::arg("message"), py::arg("sink"), "(creation_ps, latency_ps) per delivered instance.")
        .def("scalars",
             [](const Simulation& s) {
                 std::map<std::string, double> out;
                 for (const auto* r : s.metrics().scalars()) {
                     out[r->module_path + "." + r->name] = r->value;
                 }
                 return out;
             })
        .def("vector_names",
             [](const Simulation& s) {
                 std::vector<std::string> out;
                 for (const auto* v : s.metrics().vectors()) {
                     out.push_back(v->module_path + "." + v->name);
                 }
                 return out;
             })
        .def(
            "vector",
            [](const Simulation& s, const std::string& module, const std::string& name) {
                const auto* v = s.metrics().find_vector(module, name);
                if (!v) {
                    throw py::key_error(module + "." + name);
                }
                std::vector<std::pair<std::int64_t, double>> out;
                for (const auto& [t, x] : v->points) {
                    out.emplace_back(t.ticks(), x);
                }
                return out;
            },
            py::arg("module"), py::arg("name"))
        .def(
            "export",
            [](const Simulation& s, const std::filesystem::path& dir, const std::string& format) {
                const auto f = parse_export_format(format);
                if (!f) {
                    throw InvalidArgument("format must be csv or structured");
                }
                return export_metrics(s.metrics(), *f, dir);
            },
            py::arg("dir"), py::arg("format") = "csv", "Write metric files; returns their paths.");

    m.def(
        "run",
        [](const NetworkConfig& cfg, const py::object& horizon, std::uint64_t seed, bool drain) {
            RunOptions o;
            o.horizon = time_arg(horizon, "horizon");
            o.seed = seed;
            o.drain = drain;
            auto sim = std::make_unique<Simulation>(cfg, o);
            {
                py::gil_scoped_release release;
                sim->run();
            }
            return sim;
        },
        py::arg("config"), py::arg("horizon") = "1s", py::arg("seed") = 0, py::arg("drain") = true,
        "Build and run a simulation.");

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int rc = 0;
            {
                py::gil_scoped_release release;
                rc = cli::main(args, out, err);
            }
            return py::make_tuple(rc, out.str(), err.str());
        },
        py::arg("args"), "Run the command-line tool in process; returns (exit code, stdout, stderr).");

    m.def(
        "parse_time",
        [](const std::string& s) {
            auto t = parse_time(s);
            if (!t) {
                throw InvalidArgument("cannot parse time '" + s + "'");
            }
            return t->ticks();
        },
        py::arg("text"), "Picoseconds of a time literal such as '125us'.");
    m.def(
        "format_time", [](std::int64_t ps) { return format_time(SimTime::from_ticks(ps)); }, py::arg("ps"));
}
