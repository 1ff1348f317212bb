// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.

#include "generators.hpp"

#include "ivnsim/andl.hpp"
#include "ivnsim/can.hpp"
#include "ivnsim/error.hpp"
#include "ivnsim/gateway.hpp"
#include "ivnsim/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <sstream>

using namespace ivnsim;
using namespace ivnsim::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

RunOptions opts(SimTime horizon, std::uint64_t seed = 1)
{
    RunOptions o;
    o.horizon = horizon;
    o.seed = seed;
    return o;
}

/// Max latency per message name at any receiver.
std::map<std::string, SimTime> max_latency(const Simulation& sim)
{
    std::map<std::string, SimTime> out;
    for (const auto& s : sim.samples()) {
        auto& v = out[sim.config().messages[s.message].name];
        v = std::max(v, s.latency());
    }
    return out;
}

// Scenarios shared with the determinism check.
struct Scenario {
    std::string name;
    std::string text;
    RunOptions options;
    andl::CompileOptions compile;
};

std::vector<Scenario> g_scenarios;

std::unique_ptr<Simulation> run_recorded(const std::string& name, const std::string& text, const RunOptions& o,
                                         const andl::CompileOptions& c = {})
{
    g_scenarios.push_back(Scenario{name, text, o, c});
    return run_text(text, o, c);
}

// ---------------------------------------------------------------------------

Outcome bandwidth_vs_analytical()
{
    const auto t0 = Clock::now();
    const auto m = can_matrix(2024, 30);
    auto o = opts(SimTime::s(60));
    o.drain = false;
    auto sim = run_recorded("canMatrix", m.text, o);
    const double secs = elapsed(t0);
    const auto* bps = sim->metrics().find_scalar("cb", "bitsPerSec");
    if (!bps) {
        return {false, "no bitsPerSec scalar for the bus"};
    }
    const double dev = std::abs(bps->value - m.analytical_bps) / m.analytical_bps;
    std::ostringstream os;
    os << "simulated " << fmt("%.1f", bps->value) << " bit/s vs analytical " << fmt("%.1f", m.analytical_bps)
       << " bit/s, deviation " << fmt("%.3f", dev * 100) << "% (limit 2.5%), runtime " << fmt("%.2f", secs)
       << " s (limit 10 s)";
    return {dev < 0.025 && secs < 10.0, os.str()};
}

Outcome avb_latency_bound()
{
    const auto t0 = Clock::now();
    auto sim = run_recorded("avbChain", avb_chain(6), opts(SimTime::s(10)));
    const double secs = elapsed(t0);
    const auto& cfg = sim->config();
    // Confirm the reservation really sits at the cap.
    std::int64_t slope = 0;
    for (const auto& p : cfg.derived.ports) {
        if (p.device == "talker") {
            slope = p.idle_slope_a;
        }
    }
    SimTime worst{};
    std::size_t n = 0;
    for (const auto& s : sim->samples()) {
        const auto& name = cfg.messages[s.message].name;
        if (name.starts_with("streamA")) {
            worst = std::max(worst, s.latency());
            ++n;
        }
    }
    const auto released = sim->report().messages[*cfg.message_index("streamA1")].released +
                          sim->report().messages[*cfg.message_index("streamA2")].released;
    std::ostringstream os;
    os << n << " class-A samples of " << released << " released over 7 hops, reservation "
       << fmt("%.2f", static_cast<double>(slope) / 1e6) << " Mbit/s per port, max latency " << format_time(worst)
       << " (limit 2ms), runtime " << fmt("%.2f", secs) << " s (limit 60 s)";
    return {n == released && n > 0 && worst < SimTime::ms(2) && secs < 60.0, os.str()};
}

Outcome cbs_invariants()
{
    std::uint64_t frames = 0;
    std::uint64_t segments = 0;
    std::vector<std::string> problems;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto o = opts(SimTime::s(1), seed);
        o.keep_traces = true;
        auto sim = run_recorded("randomAvb" + std::to_string(seed), random_avb(seed), o);
        for (const auto* port : sim->ports()) {
            for (const auto& d : port->departures()) {
                if (d.tag.cls != TrafficClass::AVB_A && d.tag.cls != TrafficClass::AVB_B) {
                    continue;
                }
                ++frames;
                if (d.credit_at_start < 0) {
                    problems.push_back(port->device() + "->" + port->peer() + " starts with negative credit at " +
                                       format_time(d.start));
                }
            }
            for (auto cls : {TrafficClass::AVB_A, TrafficClass::AVB_B}) {
                const auto slope_idle =
                    cls == TrafficClass::AVB_A ? port->config().idle_slope_a : port->config().idle_slope_b;
                if (slope_idle <= 0) {
                    continue;
                }
                const __int128 idle = slope_idle;
                const __int128 send = slope_idle - port->config().rate;
                const auto& tr = port->credit_trace(cls);
                for (std::size_t i = 1; i < tr.size(); ++i) {
                    const __int128 dt = tr[i].time.ticks() - tr[i - 1].time.ticks();
                    const __int128 dc = tr[i].credit - tr[i - 1].credit;
                    if (dt == 0) {
                        // only the reset of positive credit on an empty queue
                        if (!(tr[i - 1].credit > 0 && tr[i].credit == 0)) {
                            problems.push_back("jump on " + port->device() + "->" + port->peer());
                        }
                        continue;
                    }
                    ++segments;
                    if (dc != idle * dt && dc != send * dt && dc != 0) {
                        problems.push_back("slope off on " + port->device() + "->" + port->peer() + " at " +
                                           format_time(tr[i].time));
                    }
                }
            }
        }
    }
    std::ostringstream os;
    os << "5 seeds, " << frames << " AVB departures, " << segments << " credit segments checked exactly, "
       << problems.size() << " violations";
    if (!problems.empty()) {
        os << " (first: " << problems.front() << ")";
    }
    return {problems.empty() && frames > 0 && segments > 0, os.str()};
}

Outcome bag_spacing()
{
    std::uint64_t checked = 0;
    std::uint64_t violations = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto o = opts(SimTime::s(1), seed);
        o.keep_traces = true;
        auto sim = run_recorded("randomRc" + std::to_string(seed), random_rc(seed), o);
        for (const auto* port : sim->ports()) {
            std::map<std::int32_t, SimTime> last;
            for (const auto& d : port->departures()) {
                if (d.tag.cls != TrafficClass::RC) {
                    continue;
                }
                auto it = last.find(d.tag.id);
                if (it != last.end()) {
                    ++checked;
                    if (d.start - it->second < d.tag.bag) {
                        ++violations;
                    }
                }
                last[d.tag.id] = d.start;
            }
        }
    }
    std::ostringstream os;
    os << "5 seeds, " << checked << " consecutive same-port departures, " << violations << " closer than the bag";
    return {violations == 0 && checked > 0, os.str()};
}

Outcome tt_determinism()
{
    auto sim = run_recorded("ttBackbone", tt_backbone(5, 20), opts(SimTime::s(1)));
    const auto& cfg = sim->config();
    std::size_t tt_msgs = 0;
    std::size_t nonzero_jitter = 0;
    std::size_t outside = 0;
    std::size_t samples = 0;
    std::size_t missing = 0;
    for (std::uint32_t m = 0; m < cfg.messages.size(); ++m) {
        const auto& msg = cfg.messages[m];
        if (!msg.name.starts_with("tt")) {
            continue;
        }
        ++tt_msgs;
        const auto ct = msg.mapping.front().binding->id;
        const auto& rx = msg.receivers.front();
        const auto s = sim->samples_for(msg.name, rx);
        samples += s.size();
        if (s.size() != sim->report().messages[m].released) {
            ++missing;
        }
        // Per-cycle arrival phase and latency must be constant.
        std::set<std::int64_t> phases;
        std::set<std::int64_t> lat;
        for (const auto& x : s) {
            phases.insert((x.arrival_time.ticks()) % msg.period.ticks());
            lat.insert(x.latency().ticks());
        }
        if (phases.size() > 1 || lat.size() > 1) {
            ++nonzero_jitter;
        }
        // Receive window of the last hop.
        std::string link;
        for (const auto& l : cfg.links) {
            if (l.a == rx || l.b == rx) {
                link = port_key(l.a == rx ? l.b : l.a, rx);
            }
        }
        for (const auto& x : s) {
            if (tt_receive_check(ct, link, x.arrival_time, cfg.derived.schedule, SimTime::zero()) !=
                TtCheck::Accept) {
                ++outside;
            }
        }
    }
    std::ostringstream os;
    os << tt_msgs << " TT messages, " << samples << " arrivals, " << nonzero_jitter
       << " with nonzero jitter, " << outside << " outside the receive window, " << missing
       << " with lost instances, " << sim->report().tt_violations << " TT violations";
    return {tt_msgs == 20 && samples > 0 && nonzero_jitter == 0 && outside == 0 && missing == 0 &&
                sim->report().tt_violations == 0,
            os.str()};
}

// Brute force: replay the insertions in time order; the pool flushes at the
// smallest arrival + holdup of its content, taking everything inserted up to
// and including that instant.
std::vector<std::pair<SimTime, std::vector<int>>> replay(std::vector<std::tuple<SimTime, SimTime, int>> ins)
{
    std::stable_sort(ins.begin(), ins.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    std::vector<std::pair<SimTime, std::vector<int>>> out;
    std::vector<std::tuple<SimTime, SimTime, int>> pool;
    std::size_t i = 0;
    while (i < ins.size() || !pool.empty()) {
        if (pool.empty()) {
            pool.push_back(ins[i++]);
            continue;
        }
        SimTime deadline = SimTime::max();
        for (const auto& p : pool) {
            deadline = std::min(deadline, std::get<0>(p) + std::get<1>(p));
        }
        if (i < ins.size() && std::get<0>(ins[i]) <= deadline) {
            pool.push_back(ins[i++]);
            continue;
        }
        std::vector<int> ids;
        for (const auto& p : pool) {
            ids.push_back(std::get<2>(p));
        }
        out.emplace_back(deadline, ids);
        pool.clear();
    }
    return out;
}

Outcome pool_oracle()
{
    std::mt19937_64 rng(99);
    int mismatches = 0;
    int residence_violations = 0;
    std::size_t flushes = 0;
    for (int seq = 0; seq < 1000; ++seq) {
        std::uniform_int_distribution<int> n(1, 40);
        std::uniform_int_distribution<std::int64_t> at(0, 20'000);
        std::uniform_int_distribution<std::int64_t> hold(0, 3'000);
        std::vector<std::tuple<SimTime, SimTime, int>> ins;
        const int count = n(rng);
        for (int i = 0; i < count; ++i) {
            // coarse microsecond grid so that ties happen
            ins.emplace_back(SimTime::us(at(rng) / 10 * 10), SimTime::us(hold(rng) / 100 * 100), i);
        }
        Kernel k(static_cast<std::uint64_t>(seq));
        std::vector<std::pair<SimTime, std::vector<int>>> got;
        PoolTimer pt(k, "gw.p", [&](std::vector<PoolEntry> es, SimTime now) {
            std::vector<int> ids;
            for (const auto& e : es) {
                ids.push_back(static_cast<int>(e.frame.id));
                if (now - e.arrival > e.holdup) {
                    ++residence_violations;
                }
            }
            got.emplace_back(now, ids);
        });
        for (const auto& [t, h, id] : ins) {
            PoolEntry e;
            e.frame.id = static_cast<std::uint16_t>(id);
            e.holdup = h;
            k.schedule(t, 0, EventKind::Arrival, [&pt, e] { pt.insert(e); });
        }
        k.run_until(SimTime::s(1));
        // Insertions at equal times are scheduled in index order, as in the replay.
        const auto want = replay(ins);
        flushes += want.size();
        if (got != want) {
            ++mismatches;
        }
    }
    std::ostringstream os;
    os << "1000 sequences, " << flushes << " flushes, " << mismatches << " disagreeing with the replay, "
       << residence_violations << " residences above hold-up";
    return {mismatches == 0 && residence_violations == 0, os.str()};
}

Outcome aggregation_tradeoff()
{
    const std::uint64_t seed = 7;
    auto pooled = run_recorded("aggregationConfig1", aggregation(seed, "config1"), opts(SimTime::s(10)));
    auto direct = run_recorded("aggregationNone", aggregation(seed, "none"), opts(SimTime::s(10)));
    auto backbone_frames = [](const Simulation& s) {
        std::uint64_t n = 0;
        for (const auto* p : s.ports()) {
            if (p->device() == "gw1" || p->device() == "gw2") {
                n += p->frames_sent();
            }
        }
        return static_cast<double>(n) / 10.0;
    };
    const double fp = backbone_frames(*pooled);
    const double fd = backbone_frames(*direct);
    const double reduction = 1.0 - fp / fd;

    const auto lp = max_latency(*pooled);
    const auto ld = max_latency(*direct);
    int lower = 0;
    std::string faster;
    std::vector<std::pair<int, double>> increase; // (id, ms)
    for (const auto& [name, l] : ld) {
        const SimTime p = lp.count(name) ? lp.at(name) : SimTime::zero();
        if (p < l) {
            ++lower;
            const auto& m = pooled->config().messages[*pooled->config().message_index(name)];
            faster += " " + name + " by " + format_time(l - p) + ", hold-up " +
                      format_time(compute_holdup(std::stoi(name.substr(1)), m.period, HoldupPolicy::Config1)) + ";";
        }
        increase.emplace_back(std::stoi(name.substr(1)), (p - l).seconds() * 1e3);
    }
    std::sort(increase.begin(), increase.end());
    const std::size_t q = increase.size() / 4;
    double low_ids = 0;
    double high_ids = 0;
    for (std::size_t i = 0; i < q; ++i) {
        low_ids += increase[i].second / static_cast<double>(q);
        high_ids += increase[increase.size() - 1 - i].second / static_cast<double>(q);
    }
    const bool all_delivered = pooled->samples().size() == direct->samples().size();
    std::ostringstream os;
    os << "backbone " << fmt("%.1f", fd) << " -> " << fmt("%.1f", fp) << " frames/s (reduction "
       << fmt("%.1f", reduction * 100) << "%, need > 30%); " << lower << " of " << ld.size()
       << " messages faster with pooling (need 0):" << faster << " mean max-latency increase " << fmt("%.3f", low_ids)
       << " ms for the lowest ids vs " << fmt("%.3f", high_ids) << " ms for the highest";
    return {reduction > 0.30 && lower == 0 && high_ids > low_ids && all_delivered, os.str()};
}

Outcome multicast_saving()
{
    const int k = 4;
    auto uni = run_recorded("fanoutUnicast", multicast_fanout(k, false), opts(SimTime::s(1)));
    auto multi = run_recorded("fanoutMulticast", multicast_fanout(k, true), opts(SimTime::s(1)));
    auto first_hop = [](const Simulation& s) {
        return s.metrics().find_scalar("src", "bitsPerSec[sw0]")->value;
    };
    auto worst = [](const Simulation& s) {
        SimTime w{};
        for (const auto& x : s.samples()) {
            w = std::max(w, x.latency());
        }
        return w;
    };
    const double bu = first_hop(*uni);
    const double bm = first_hop(*multi);
    const double ratio = bu / bm;
    const bool delivered = uni->samples().size() == multi->samples().size() && !multi->samples().empty();
    std::ostringstream os;
    os << "first hop " << fmt("%.0f", bu) << " bit/s unicast vs " << fmt("%.0f", bm) << " bit/s multicast, ratio "
       << fmt("%.4f", ratio) << " (want " << k << " within 1%); max latency " << format_time(worst(*uni)) << " -> "
       << format_time(worst(*multi));
    return {std::abs(ratio - k) / k <= 0.01 && worst(*multi) <= worst(*uni) && delivered, os.str()};
}

Outcome dsl_golden()
{
    const std::string dir = IVNSIM_SCENARIO_DIR;
    const std::string small_text = read_text(dir + "/small_network.andl");
    auto sim = run_recorded("smallNetwork", small_text, opts(SimTime::s(1)));
    const auto deliveries = sim->samples_for("msg1", "cn2").size();
    const auto expected = static_cast<std::size_t>(SimTime::s(1).ticks() / SimTime::ms(1).ticks());
    SimTime worst_hold{};
    std::size_t pooled = 0;
    for (const auto& r : sim->residences()) {
        if (sim->config().messages[r.message].name == "msg1") {
            worst_hold = std::max(worst_hold, r.flush - r.arrival);
            ++pooled;
        }
    }
    const bool count_ok = deliveries + 1 >= expected && deliveries <= expected + 1;
    const bool hold_ok = pooled == sim->report().messages[0].released && worst_hold <= SimTime::ms(2);

    // Extension fragment merged into the same network.
    Diagnostics diags;
    std::vector<andl::File> files;
    files.push_back(andl::parse(small_text, diags, 0));
    files.push_back(andl::parse(read_text(dir + "/recbar_extension.andl"), diags, 1));
    const auto merged = andl::lower(andl::merge(std::move(files)), {}, diags);
    int new_switches = 0;
    for (const auto& d : merged.devices) {
        if (d.kind == DeviceKind::Switch && d.name.starts_with("switch")) {
            ++new_switches;
        }
    }
    // Reachability over the Ethernet links from switch1.
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& l : merged.links) {
        adj[l.a].push_back(l.b);
        adj[l.b].push_back(l.a);
    }
    std::set<std::string> seen{"switch1"};
    std::queue<std::string> todo;
    todo.push("switch1");
    while (!todo.empty()) {
        for (const auto& n : adj[todo.front()]) {
            if (seen.insert(n).second) {
                todo.push(n);
            }
        }
        todo.pop();
    }
    std::vector<std::string> unreachable;
    for (const char* n : {"lid1", "lid2", "cam1", "cam2", "ecu1", "log", "fusi", "gateway0", "gateway1", "gateway2",
                          "gateway3", "gateway4", "gateway5", "gateway6", "gateway7", "gateway9", "gateway10"}) {
        if (!seen.count(n)) {
            unreachable.push_back(n);
        }
    }
    std::ostringstream os;
    os << "msg1 delivered " << deliveries << " times (want " << expected << " +/- 1), max hold-up "
       << format_time(worst_hold) << " (limit 2ms); merged fragment: " << diags.error_count() << " errors, "
       << new_switches << " backbone switches, " << unreachable.size() << " unreachable nodes";
    return {count_ok && hold_ok && !diags.has_errors() && new_switches == 3 && unreachable.empty(), os.str()};
}

Outcome determinism()
{
    std::vector<std::string> differing;
    for (const auto& s : g_scenarios) {
        const auto a = metrics_hash(*run_text(s.text, s.options, s.compile));
        const auto b = metrics_hash(*run_text(s.text, s.options, s.compile));
        if (a != b) {
            differing.push_back(s.name);
        }
    }
    std::ostringstream os;
    os << g_scenarios.size() << " acceptance scenarios run twice, " << differing.size()
       << " with differing export hashes";
    for (const auto& d : differing) {
        os << " " << d;
    }
    return {differing.empty() && !g_scenarios.empty(), os.str()};
}

Outcome priority_monotonicity()
{
    auto sim = run_recorded("priorityBus", priority_bus(), opts(SimTime::s(10)));
    std::vector<std::pair<int, SimTime>> worst;
    for (const auto& [name, l] : max_latency(*sim)) {
        worst.emplace_back(std::stoi(name.substr(1)), l);
    }
    std::sort(worst.begin(), worst.end());
    bool monotone = worst.size() == 10;
    std::ostringstream os;
    os << "max latency by id:";
    for (std::size_t i = 0; i < worst.size(); ++i) {
        os << " " << worst[i].first << "=" << fmt("%.3f", worst[i].second.seconds() * 1e3) << "ms";
        if (i > 0 && worst[i].second < worst[i - 1].second) {
            monotone = false;
        }
    }
    return {monotone, os.str()};
}

} // namespace

int main()
{
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, bandwidth_vs_analytical}, {2, avb_latency_bound},  {3, cbs_invariants},      {4, bag_spacing},
        {5, tt_determinism},          {6, pool_oracle},        {7, aggregation_tradeoff}, {8, multicast_saving},
        {9, dsl_golden},              {11, priority_monotonicity}, {10, determinism},
    };
    std::map<int, Outcome> results;
    for (const auto& [id, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        results[id] = o;
    }
    int failed = 0;
    for (const auto& [id, o] : results) {
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << "\n";
        failed += o.pass ? 0 : 1;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
    return failed == 0 ? 0 : 1;
}
