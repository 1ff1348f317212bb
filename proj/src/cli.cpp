#include "ivnsim/cli.hpp"

#include "ivnsim/andl.hpp"
#include "ivnsim/error.hpp"
#include "ivnsim/metrics.hpp"
#include "ivnsim/simulation.hpp"

#include <CLI11.hpp>

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace ivnsim::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot read " + path);
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    if (is.bad()) {
        throw IoError("cannot read " + path);
    }
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
}

bool is_json(const std::string& path)
{
    return fs::path(path).extension() == ".json";
}

/// Splits "key=value"; returns false when '=' is missing.
bool split_override(const std::string& s, std::pair<std::string, std::string>& out)
{
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
        return false;
    }
    auto trim = [](std::string v) {
        const auto b = v.find_first_not_of(" \t");
        const auto e = v.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    out = {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
    return true;
}

bool matches(const std::string& pattern, const std::string& name)
{
    if (pattern.empty()) {
        return true;
    }
    if (pattern.find_first_of("*?[") != std::string::npos) {
        return fnmatch(pattern.c_str(), name.c_str(), 0) == 0;
    }
    return name.find(pattern) != std::string::npos;
}

/// "rxLatency[msg1]" with prefix "rxLatency" -> "msg1".
std::optional<std::string> bracket_arg(const std::string& name, std::string_view prefix)
{
    if (!name.starts_with(prefix) || name.size() < prefix.size() + 2 || name[prefix.size()] != '[' ||
        name.back() != ']') {
        return std::nullopt;
    }
    return name.substr(prefix.size() + 1, name.size() - prefix.size() - 2);
}

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// Left-aligned first column, right-aligned others.
std::string table(const std::vector<std::vector<std::string>>& rows)
{
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) {
            width[i] = std::max(width[i], r[i].size());
        }
    }
    std::string out;
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            const std::string pad(width[i] - r[i].size(), ' ');
            if (i > 0) {
                out += "  ";
            }
            out += i == 0 ? r[i] + pad : pad + r[i];
        }
        while (!out.empty() && out.back() == ' ') {
            out.pop_back();
        }
        out += '\n';
    }
    return out;
}

SimTime to_time(double seconds)
{
    return SimTime::ps(std::llround(seconds * 1e12));
}

// ---------------------------------------------------------------------------
// Scenario loading

int report_diags(const Diagnostics& diags, const std::vector<std::string>& files, std::ostream& err)
{
    err << diags.format(files);
    return diags.has_errors() ? kExitSemantic : kExitOk;
}

struct ScenarioRun {
    std::vector<std::string> files;
    fs::path out_dir;
    std::string output;
    std::string errors;
    int status = kExitOk;
};

struct RunFlags {
    LoadOptions load;
    RunOptions run;
    ExportFormat format = ExportFormat::Csv;
};

void run_scenario(ScenarioRun& sr, const RunFlags& flags)
{
    std::ostringstream out;
    std::ostringstream err;
    try {
        Diagnostics diags;
        NetworkConfig cfg = load_scenario(sr.files, flags.load, diags);
        sr.status = report_diags(diags, sr.files, err);
        if (sr.status == kExitOk) {
            Simulation sim(cfg, flags.run);
            const auto& report = sim.run();
            out << format_report(cfg, report);
            const auto files = export_metrics(sim.metrics(), flags.format, sr.out_dir);
            char hash[32];
            std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(hash_files(files)));
            out << "results in " << sr.out_dir.string() << " (" << files.size() << " files, hash " << hash << ")\n";
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        sr.status = kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        sr.status = kExitSemantic;
    }
    sr.output = out.str();
    sr.errors = err.str();
}

// ---------------------------------------------------------------------------
// Analysis

struct AnalyzeFlags {
    std::string dir;
    std::string metric;
    std::string filter;
    std::string plot;
    std::optional<std::pair<SimTime, SimTime>> window;
};

void write_plot(const std::string& path, const std::vector<const VectorSeries*>& series)
{
    std::string body = "module,series,time_s,value\n";
    for (const auto* v : series) {
        for (const auto& [t, val] : v->points) {
            body += v->module_path + "," + v->name + "," + format_value(t.seconds()) + "," + format_value(val) + "\n";
        }
    }
    write_text(path, body);
}

int analyze(const AnalyzeFlags& flags, std::ostream& out, std::ostream& err)
{
    const MetricStore store = load_metrics(flags.dir);
    std::vector<std::vector<std::string>> rows;
    std::vector<const VectorSeries*> plotted;

    if (flags.metric == "latency" || flags.metric == "jitter") {
        const bool lat = flags.metric == "latency";
        rows.push_back(lat ? std::vector<std::string>{"message", "receiver", "samples", "min_us", "max_us", "mean_us"}
                           : std::vector<std::string>{"message", "receiver", "samples", "jitter_us"});
        // rxLatency at non-receivers (stations) is listed separately by module.
        for (const auto* v : store.vectors()) {
            const auto msg = bracket_arg(v->name, "rxLatency");
            if (!msg || !matches(flags.filter, *msg) || v->points.empty()) {
                continue;
            }
            plotted.push_back(v);
            const auto n = std::to_string(v->points.size());
            if (lat) {
                double mn = v->points.front().second;
                double mx = mn;
                double sum = 0.0;
                for (const auto& p : v->points) {
                    mn = std::min(mn, p.second);
                    mx = std::max(mx, p.second);
                    sum += p.second;
                }
                rows.push_back({*msg, v->module_path, n, fixed(mn * 1e6, 3), fixed(mx * 1e6, 3),
                                fixed(sum / static_cast<double>(v->points.size()) * 1e6, 3)});
            } else {
                std::vector<SimTime> lats;
                lats.reserve(v->points.size());
                for (const auto& p : v->points) {
                    lats.push_back(to_time(p.second));
                }
                rows.push_back({*msg, v->module_path, n, fixed(jitter(lats).seconds() * 1e6, 3)});
            }
        }
    } else if (flags.metric == "bandwidth") {
        rows.push_back({"link", "frames", "bits", "bit_per_s"});
        for (const auto* v : store.vectors()) {
            std::string link;
            if (v->name == "txBits") {
                link = v->module_path;
            } else if (const auto peer = bracket_arg(v->name, "txBits")) {
                link = v->module_path + "->" + *peer;
            } else {
                continue;
            }
            if (!matches(flags.filter, link)) {
                continue;
            }
            plotted.push_back(v);
            double bits = 0.0;
            for (const auto& p : v->points) {
                bits += p.second;
            }
            double bps = 0.0;
            if (flags.window) {
                bps = utilized_bandwidth(*v, flags.window->first, flags.window->second);
            } else {
                const std::string scalar = v->name == "txBits" ? "bitsPerSec" : "bitsPerSec" + v->name.substr(6);
                const auto* s = store.find_scalar(v->module_path, scalar);
                if (s) {
                    bps = s->value;
                } else if (!v->points.empty() && v->points.back().first > SimTime::zero()) {
                    bps = utilized_bandwidth(*v, SimTime::zero(), v->points.back().first);
                }
            }
            rows.push_back({link, std::to_string(v->points.size()), format_value(bits), fixed(bps, 1)});
        }
    } else if (flags.metric == "queues") {
        rows.push_back({"queue", "samples", "max", "mean", "drops"});
        for (const auto* v : store.vectors()) {
            const auto q = bracket_arg(v->name, "QueueLength");
            const auto c = bracket_arg(v->name, "credit");
            if ((!q && !c) || !matches(flags.filter, v->module_path + "." + v->name)) {
                continue;
            }
            plotted.push_back(v);
            if (!q || v->points.empty()) {
                continue;
            }
            // Time-weighted mean over the recorded span.
            double mx = 0.0;
            double area = 0.0;
            for (std::size_t i = 0; i < v->points.size(); ++i) {
                mx = std::max(mx, v->points[i].second);
                if (i + 1 < v->points.size()) {
                    area += v->points[i].second * (v->points[i + 1].first - v->points[i].first).seconds();
                }
            }
            const double span = (v->points.back().first - v->points.front().first).seconds();
            const double mean = span > 0 ? area / span : v->points.front().second;
            const auto* d = store.find_scalar(v->module_path, "drops[" + *q + "]");
            rows.push_back({v->module_path + "." + *q, std::to_string(v->points.size()), format_value(mx),
                            fixed(mean, 3), d ? format_value(d->value) : "0"});
        }
    } else {
        err << "error: unknown metric '" << flags.metric << "' (latency, jitter, bandwidth or queues)\n";
        return kExitSemantic;
    }

    if (plotted.empty()) {
        err << "error: no " << flags.metric << " series"
            << (flags.filter.empty() ? std::string() : " matching '" + flags.filter + "'") << " in " << flags.dir
            << "\n";
        return kExitSemantic;
    }
    out << table(rows);
    if (!flags.plot.empty()) {
        write_plot(flags.plot, plotted);
        out << "plot data in " << flags.plot << "\n";
    }
    return kExitOk;
}

} // namespace

NetworkConfig load_scenario(const std::vector<std::string>& files, const LoadOptions& options, Diagnostics& diags)
{
    if (files.empty()) {
        throw InvalidArgument("no input file");
    }
    if (files.size() == 1 && is_json(files.front())) {
        const std::string text = read_file(files.front());
        NetworkConfig cfg;
        try {
            cfg = config_from_json(text, diags);
        } catch (const ConfigError& e) {
            diags.error(e.what());
            return cfg;
        }
        if (!options.overrides.empty()) {
            for (const auto& [k, v] : options.overrides) {
                apply_override(cfg, k, v, diags);
            }
            Diagnostics derived;
            derive(cfg, derived);
            diags.append(derived);
        }
        return cfg;
    }
    std::vector<andl::File> parsed;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (is_json(files[i])) {
            diags.error("a config document cannot be merged with other inputs");
            return {};
        }
        parsed.push_back(andl::parse(read_file(files[i]), diags, static_cast<int>(i)));
    }
    if (diags.has_errors()) {
        return {};
    }
    andl::CompileOptions co;
    co.network = options.network;
    co.overrides = options.overrides;
    return andl::lower(andl::merge(std::move(parsed)), co, diags);
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Discrete-event simulator for mixed-critical in-vehicle networks", "ivnsim"};
    app.require_subcommand(1);

    std::vector<std::string> inputs;
    std::string network;
    std::vector<std::string> sets;
    auto add_load = [&](CLI::App* sub) {
        sub->add_option("files", inputs, "ANDL files (merged in order) or one config .json")->required();
        sub->add_option("--network", network, "network to compile when a file declares several");
        sub->add_option("--set", sets, "override key=value (after inline ini)");
    };

    auto* compile = app.add_subcommand("compile", "compile ANDL into a config document");
    add_load(compile);
    std::string compile_out;
    compile->add_option("-o,--out", compile_out, "output file (default: stdout)");

    auto* validate = app.add_subcommand("validate", "check ANDL and print diagnostics");
    add_load(validate);

    auto* run = app.add_subcommand("run", "simulate and export metrics");
    run->add_option("scenarios", inputs,
                    "scenario inputs; join files of one scenario with '+', e.g. base.andl+extra.andl")
        ->required();
    run->add_option("--network", network, "network to compile when a file declares several");
    run->add_option("--set", sets, "override key=value (after inline ini)");
    std::string horizon = "1s";
    std::string window;
    std::string run_out = "results";
    std::string format = "csv";
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    bool no_drain = false;
    run->add_option("--horizon", horizon, "simulated time, e.g. 1s or 500ms")->capture_default_str();
    run->add_option("--seed", seed, "random seed")->capture_default_str();
    run->add_option("--out", run_out, "result directory")->capture_default_str();
    run->add_option("--window", window, "bandwidth window t0:t1");
    run->add_option("--format", format, "csv or structured")->capture_default_str();
    run->add_option("--jobs", jobs, "scenarios simulated in parallel")->capture_default_str();
    run->add_flag("--no-drain", no_drain, "stop at the horizon instead of draining in-flight frames");

    auto* an = app.add_subcommand("analyze", "tabulate exported metrics");
    AnalyzeFlags aflags;
    std::string awindow;
    an->add_option("results", aflags.dir, "result directory")->required();
    an->add_option("--metric", aflags.metric, "latency, jitter, bandwidth or queues")->required();
    an->add_option("--filter", aflags.filter, "message or link name; substring or glob");
    an->add_option("--plot", aflags.plot, "write the selected series as plot-ready CSV");
    an->add_option("--window", awindow, "bandwidth window t0:t1");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitSemantic;
    }

    LoadOptions load;
    load.network = network;
    for (const auto& s : sets) {
        std::pair<std::string, std::string> kv;
        if (!split_override(s, kv)) {
            err << "usage error: --set expects key=value, got '" << s << "'\n";
            return kExitSemantic;
        }
        load.overrides.push_back(std::move(kv));
    }

    try {
        if (compile->parsed() || validate->parsed()) {
            Diagnostics diags;
            NetworkConfig cfg = load_scenario(inputs, load, diags);
            const int status = report_diags(diags, inputs, err);
            if (status != kExitOk) {
                err << diags.error_count() << " error(s)\n";
                return status;
            }
            if (validate->parsed()) {
                out << cfg.network << ": " << cfg.devices.size() << " devices, " << cfg.links.size()
                    << " Ethernet links, " << cfg.buses.size() << " CAN buses, " << cfg.messages.size()
                    << " messages\n";
                return kExitOk;
            }
            const std::string doc = to_json(cfg);
            if (compile_out.empty()) {
                out << doc;
            } else {
                write_text(compile_out, doc);
            }
            return kExitOk;
        }

        if (an->parsed()) {
            if (!awindow.empty()) {
                aflags.window = parse_window(awindow);
                if (!aflags.window) {
                    err << "usage error: --window expects t0:t1 with t0 < t1\n";
                    return kExitSemantic;
                }
            }
            return analyze(aflags, out, err);
        }

        RunFlags flags;
        flags.load = load;
        const auto h = parse_time(horizon);
        if (!h || *h <= SimTime::zero()) {
            err << "usage error: --horizon must be a positive time, got '" << horizon << "'\n";
            return kExitSemantic;
        }
        flags.run.horizon = *h;
        flags.run.seed = seed;
        flags.run.drain = !no_drain;
        if (!window.empty()) {
            flags.run.window = parse_window(window);
            if (!flags.run.window) {
                err << "usage error: --window expects t0:t1 with t0 < t1\n";
                return kExitSemantic;
            }
        }
        const auto fmt = parse_export_format(format);
        if (!fmt) {
            err << "usage error: --format must be csv or structured\n";
            return kExitSemantic;
        }
        flags.format = *fmt;

        std::vector<ScenarioRun> runs(inputs.size());
        std::set<std::string> used;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            std::string rest = inputs[i];
            for (std::size_t plus; (plus = rest.find('+')) != std::string::npos; rest = rest.substr(plus + 1)) {
                runs[i].files.push_back(rest.substr(0, plus));
            }
            runs[i].files.push_back(rest);
            std::string stem;
            for (const auto& f : runs[i].files) {
                stem += (stem.empty() ? "" : "+") + fs::path(f).stem().string();
            }
            // repeated scenarios get a numeric suffix
            for (std::string base = stem; !used.insert(stem).second;) {
                stem = base + "." + std::to_string(i + 1);
            }
            runs[i].out_dir = inputs.size() == 1 ? fs::path(run_out) : fs::path(run_out) / stem;
        }
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i; (i = next.fetch_add(1)) < runs.size();) {
                run_scenario(runs[i], flags);
            }
        };
        const unsigned n = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(runs.size()));
        std::vector<std::thread> pool;
        for (unsigned t = 1; t < n; ++t) {
            pool.emplace_back(worker);
        }
        worker();
        for (auto& t : pool) {
            t.join();
        }
        int status = kExitOk;
        for (const auto& r : runs) {
            err << r.errors;
            out << r.output;
            status = std::max(status, r.status);
        }
        return status;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitSemantic;
    }
}

} // namespace ivnsim::cli
