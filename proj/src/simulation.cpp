#include "ivnsim/simulation.hpp"

#include "ivnsim/error.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

namespace ivnsim {

namespace {

double seconds(SimTime t)
{
    return t.seconds();
}

SimTime uniform_delay(Kernel& k, SimTime max)
{
    if (max <= SimTime::zero()) {
        return SimTime::zero();
    }
    std::uniform_int_distribution<std::int64_t> dist(0, max.ticks());
    return SimTime::ps(dist(k.rng()));
}

} // namespace

struct Simulation::Impl {
    struct Device {
        const DeviceSpec* spec = nullptr;
        std::uint32_t index = 0;
        ModuleId module = 0;
        Oscillator clock;
        std::map<std::uint32_t, std::size_t> port_to; // peer device -> port index
        std::map<std::string, std::uint32_t> can_port; // bus name -> attachment index
        RoutingTable routes;
        std::map<std::string, std::unique_ptr<PoolTimer>> pools;
        std::map<std::uint32_t, SeriesId> latency_series;   // message -> rxLatency
        std::map<std::uint32_t, SeriesId> residence_series; // message -> poolResidence
    };

    Simulation& sim;
    const NetworkConfig& cfg;
    std::vector<Device> devices;
    std::vector<std::unique_ptr<EgressPort>> ports;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> port_ends; // (device, peer)
    std::map<std::string, std::unique_ptr<CanBus>> buses;
    std::map<std::string, std::size_t> bus_index;
    // (device, address, src) -> peers
    std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::vector<std::uint32_t>> forwarding;
    std::vector<std::set<std::uint32_t>> group_exits; // per address
    std::vector<std::set<std::uint32_t>> receivers;   // per message
    std::uint64_t serial = 0;
    std::vector<std::uint64_t> instances; // per source

    Impl(Simulation& s) : sim(s), cfg(s.cfg_) {}

    std::uint32_t dev(const std::string& name) const { return *cfg.device_index(name); }

    // -----------------------------------------------------------------------
    // Construction

    void build()
    {
        const auto& dc = cfg.derived;
        const std::size_t n = cfg.devices.size();
        devices.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            auto& d = devices[i];
            d.spec = &cfg.devices[i];
            d.index = i;
            d.module = sim.kernel_.register_module(d.spec->name);
            d.clock = Oscillator(d.spec->drift);
        }
        group_exits.resize(dc.addresses.size());
        for (std::size_t a = 0; a < dc.addresses.size(); ++a) {
            if (dc.addresses[a].device == kNoDevice) {
                for (const auto& e : dc.addresses[a].exits) {
                    group_exits[a].insert(dev(e));
                }
            }
        }
        receivers.resize(cfg.messages.size());
        for (std::size_t m = 0; m < cfg.messages.size(); ++m) {
            for (const auto& r : cfg.messages[m].receivers) {
                receivers[m].insert(dev(r));
            }
        }

        MetricStore* store = &sim.metrics_;
        for (const auto& p : dc.ports) {
            const std::uint32_t a = dev(p.device);
            const std::uint32_t b = dev(p.peer);
            PortConfig pc;
            pc.rate = p.rate;
            pc.queue_capacity = p.queue_capacity;
            pc.precedence = cfg.sim.precedence;
            pc.idle_slope_a = p.idle_slope_a;
            pc.idle_slope_b = p.idle_slope_b;
            pc.windows = dc.schedule.windows_for(port_key(p.device, p.peer));
            pc.cycle = dc.schedule.cycle_length;
            pc.clock = devices[a].clock;
            pc.record_queue = cfg.metrics.queue_length;
            pc.record_credit = cfg.metrics.credit;
            pc.record_departures = cfg.metrics.departures;
            pc.record_tx_bits = cfg.metrics.tx_bits;
            pc.keep_trace = sim.options_.keep_traces;
            const std::size_t index = ports.size();
            ports.push_back(std::make_unique<EgressPort>(sim.kernel_, store, p.device, p.peer, std::move(pc),
                                                         [this, a, b](EthFrame f) { eth_arrive(b, a, std::move(f)); }));
            port_ends.emplace_back(a, b);
            devices[a].port_to[b] = index;
        }

        for (const auto& f : dc.forwarding) {
            auto& peers = forwarding[{dev(f.device), f.address, f.src}];
            for (const auto& p : f.peers) {
                peers.push_back(dev(p));
            }
        }

        for (const auto& b : cfg.buses) {
            auto bus = std::make_unique<CanBus>(sim.kernel_, store, b.name, b.bitrate, b.stuffing, cfg.metrics.tx_bits);
            for (const auto& name : b.attached) {
                const std::uint32_t d = dev(name);
                const auto& spec = cfg.devices[d];
                const CanTxBufferMode mode = spec.kind == DeviceKind::Gateway
                                                 ? spec.can_tx_buffer.value_or(cfg.sim.can_tx_buffer)
                                                 : CanTxBufferMode::Fifo;
                const std::string bus_name = b.name;
                devices[d].can_port[b.name] =
                    bus->attach(name, [this, d, bus_name](const CanFrame& f) { can_arrive(d, bus_name, f); }, mode);
            }
            bus->on_overwrite([this](const CanFrame& f) { count_drop({f.carried}); });
            bus_index[b.name] = buses.size();
            buses.emplace(b.name, std::move(bus));
        }
        for (const auto& f : dc.filters) {
            const std::uint32_t d = dev(f.device);
            buses.at(f.bus)->add_filter(devices[d].can_port.at(f.bus), f.can_id);
        }

        for (const auto& r : dc.rules) {
            const std::uint32_t g = dev(r.gateway);
            devices[g].routes.add(r.ingress, r.key, r.action);
        }
        for (auto& d : devices) {
            if (d.spec->kind != DeviceKind::Gateway) {
                continue;
            }
            for (const auto& p : d.spec->pools) {
                const std::uint32_t g = d.index;
                const std::string pool_name = p;
                d.pools.emplace(p, std::make_unique<PoolTimer>(
                                       sim.kernel_, d.spec->name + "." + p,
                                       [this, g, pool_name](std::vector<PoolEntry> entries, SimTime now) {
                                           pool_flush(g, pool_name, std::move(entries), now);
                                       }));
            }
        }

        instances.assign(dc.sources.size(), 0);
        for (std::size_t s = 0; s < dc.sources.size(); ++s) {
            schedule_release(s, 0);
        }
    }

    // -----------------------------------------------------------------------
    // Sources

    void schedule_release(std::size_t s, std::uint64_t k)
    {
        const auto& src = cfg.derived.sources[s];
        const auto& d = devices[dev(src.device)];
        const SimTime local = src.offset + src.period * static_cast<std::int64_t>(k);
        SimTime t = d.clock.local_to_ideal(local) + uniform_delay(sim.kernel_, src.release_jitter);
        if (t > sim.options_.horizon) {
            return;
        }
        t = std::max(t, sim.kernel_.now());
        sim.kernel_.schedule(t, d.module, EventKind::Release, [this, s, k] {
            release(s);
            schedule_release(s, k + 1);
        });
    }

    void release(std::size_t s)
    {
        const auto& src = cfg.derived.sources[s];
        const std::uint32_t d = dev(src.device);
        const SimTime now = sim.kernel_.now();
        Carried c{src.message, instances[s]++, now, d};
        ++sim.report_.messages[src.message].released;
        if (src.can) {
            CanFrame f;
            f.id = src.can_id;
            f.payload_len = static_cast<std::uint8_t>(std::min(cfg.messages[src.message].payload, kCanMaxPayload));
            for (int i = 0; i < f.payload_len; ++i) {
                f.payload[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((c.instance >> (8 * i)) & 0xFF);
            }
            f.origin_bus = static_cast<std::uint32_t>(bus_index.at(src.bus));
            f.creation_time = now;
            f.carried = c;
            buses.at(src.bus)->submit(devices[d].can_port.at(src.bus), f);
            return;
        }
        EthFrame f;
        f.src = d;
        f.dst = src.dst;
        f.payload_len = src.payload;
        f.tag = src.tag;
        f.creation_time = now;
        f.carried = {c};
        f.serial = serial++;
        eth_send(d, std::move(f), std::nullopt);
    }

    // -----------------------------------------------------------------------
    // Ethernet

    void count_drop(const std::vector<Carried>& carried)
    {
        for (const auto& c : carried) {
            ++sim.report_.messages[c.message].dropped;
        }
    }

    /// Enqueues on every egress port of the forwarding entry.
    void eth_send(std::uint32_t d, EthFrame f, std::optional<std::uint32_t> ingress)
    {
        const bool group = f.dst >= devices.size();
        auto it = forwarding.find({d, f.dst, group ? f.src : kNoDevice});
        if (it == forwarding.end()) {
            ++sim.report_.unknown_destination;
            sim.metrics_.add_scalar(devices[d].spec->name, "unknownDestination", 1.0, "frames");
            count_drop(f.carried);
            return;
        }
        for (std::uint32_t peer : it->second) {
            if (ingress && peer == *ingress) {
                continue;
            }
            auto& port = *ports[devices[d].port_to.at(peer)];
            EthFrame copy = f;
            const auto carried = copy.carried;
            if (!port.enqueue(std::move(copy))) {
                count_drop(carried);
            }
        }
    }

    void station(std::uint32_t d, const std::vector<Carried>& carried)
    {
        if (!cfg.metrics.stations) {
            return;
        }
        const SimTime now = sim.kernel_.now();
        for (const auto& c : carried) {
            sim.stations_.push_back(StationRecord{c.message, c.instance, c.origin, d, now});
            record_latency(d, c, now);
        }
    }

    void record_latency(std::uint32_t d, const Carried& c, SimTime now)
    {
        if (!cfg.metrics.latency) {
            return;
        }
        auto& dv = devices[d];
        auto it = dv.latency_series.find(c.message);
        if (it == dv.latency_series.end()) {
            it = dv.latency_series
                     .emplace(c.message, sim.metrics_.series(dv.spec->name, "rxLatency[" + cfg.messages[c.message].name + "]"))
                     .first;
        }
        sim.metrics_.append(it->second, now, seconds(now - c.created));
    }

    void deliver(std::uint32_t d, const Carried& c)
    {
        const SimTime now = sim.kernel_.now();
        sim.samples_.push_back(LatencySample{c.message, d, c.origin, c.created, now});
        auto& st = sim.report_.messages[c.message];
        ++st.delivered;
        const SimTime lat = now - c.created;
        st.total_latency += lat;
        st.min_latency = st.min_latency ? std::min(*st.min_latency, lat) : lat;
        st.max_latency = st.max_latency ? std::max(*st.max_latency, lat) : lat;
        record_latency(d, c, now);
    }

    bool addressed_to(std::uint32_t d, std::uint32_t dst) const
    {
        return dst == d || (dst < group_exits.size() && group_exits[dst].count(d) != 0);
    }

    void eth_arrive(std::uint32_t d, std::uint32_t from, EthFrame f)
    {
        auto& dv = devices[d];
        if (f.tag.cls == TrafficClass::TT) {
            const SimTime local = dv.clock.ideal_to_local(sim.kernel_.now());
            const auto link = port_key(devices[from].spec->name, dv.spec->name);
            if (tt_receive_check(f.tag.id, link, local, cfg.derived.schedule, cfg.sim.tt_tolerance) ==
                TtCheck::Violation) {
                ++sim.report_.tt_violations;
                sim.metrics_.add_scalar(dv.spec->name, "ttViolation", 1.0, "frames");
                count_drop(f.carried);
                return;
            }
        }
        switch (dv.spec->kind) {
        case DeviceKind::Switch:
            station(d, f.carried);
            sim.kernel_.schedule_in(dv.spec->hardware_delay, dv.module, EventKind::Deliver,
                                    [this, d, from, f = std::move(f)]() mutable { eth_send(d, std::move(f), from); });
            return;
        case DeviceKind::Node:
            if (!addressed_to(d, f.dst)) {
                ++sim.report_.unknown_destination;
                sim.metrics_.add_scalar(dv.spec->name, "unknownDestination", 1.0, "frames");
                count_drop(f.carried);
                return;
            }
            for (const auto& c : f.carried) {
                if (receivers[c.message].count(d)) {
                    deliver(d, c);
                }
            }
            return;
        case DeviceKind::Gateway: gateway_eth(d, std::move(f)); return;
        }
    }

    // -----------------------------------------------------------------------
    // Gateways

    void no_route(std::uint32_t g, const Carried& c)
    {
        ++sim.report_.no_route;
        sim.metrics_.add_scalar(devices[g].spec->name, "noRoute", 1.0, "frames");
        ++sim.report_.messages[c.message].dropped;
    }

    void gateway_eth(std::uint32_t g, EthFrame f)
    {
        auto& gw = devices[g];
        if (!addressed_to(g, f.dst)) {
            ++sim.report_.unknown_destination;
            sim.metrics_.add_scalar(gw.spec->name, "unknownDestination", 1.0, "frames");
            count_drop(f.carried);
            return;
        }
        station(g, f.carried);
        const std::string ingress = "eth:" + devices[f.src].spec->name;
        if (f.aggregate.empty()) {
            for (const auto& c : f.carried) {
                if (receivers[c.message].count(g)) {
                    deliver(g, c);
                }
                const auto actions = gw.routes.route(ingress, class_key(f.tag));
                if (actions.empty() && !receivers[c.message].count(g)) {
                    no_route(g, c);
                    continue;
                }
                CanRecord rec;
                rec.id = 0;
                rec.dlc = static_cast<std::uint8_t>(std::min(cfg.messages[c.message].payload, kCanMaxPayload));
                for (const auto& a : actions) {
                    execute(g, a, rec, c, f.tag);
                }
            }
            return;
        }
        std::vector<CanRecord> records;
        try {
            records = decode_aggregate(f.aggregate);
        } catch (const MalformedAggregate&) {
            sim.metrics_.add_scalar(gw.spec->name, "malformedAggregate", 1.0, "frames");
            count_drop(f.carried);
            return;
        }
        if (records.size() != f.carried.size()) {
            throw InternalConsistency("aggregate record count does not match its carried messages");
        }
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& c = f.carried[i];
            if (receivers[c.message].count(g)) {
                deliver(g, c);
            }
            const auto actions = gw.routes.route(ingress, can_key(records[i].id));
            if (actions.empty() && !receivers[c.message].count(g)) {
                no_route(g, c);
                continue;
            }
            for (const auto& a : actions) {
                execute(g, a, records[i], c, f.tag);
            }
        }
    }

    void can_arrive(std::uint32_t d, const std::string& bus, const CanFrame& f)
    {
        auto& dv = devices[d];
        if (receivers[f.carried.message].count(d)) {
            deliver(d, f.carried);
        }
        if (dv.spec->kind != DeviceKind::Gateway) {
            return;
        }
        const auto actions = dv.routes.route(bus, can_key(f.id));
        if (actions.empty()) {
            if (!receivers[f.carried.message].count(d)) {
                no_route(d, f.carried);
            }
            return;
        }
        station(d, {f.carried});
        CanRecord rec;
        rec.id = f.id;
        rec.dlc = f.payload_len;
        rec.data = f.payload;
        for (const auto& a : actions) {
            execute(d, a, rec, f.carried, std::nullopt);
        }
    }

    SimTime processing(std::uint32_t g)
    {
        const auto& spec = *devices[g].spec;
        return spec.processing_delay + uniform_delay(sim.kernel_, spec.processing_jitter);
    }

    void execute(std::uint32_t g, const RouteAction& a, const CanRecord& rec, const Carried& c,
                 std::optional<ClassTag> /*ingress_tag*/)
    {
        auto& gw = devices[g];
        if (a.kind == RouteAction::Kind::ToCan) {
            CanFrame f;
            f.id = a.can_id;
            f.payload_len = rec.dlc;
            f.payload = rec.data;
            f.origin_bus = static_cast<std::uint32_t>(bus_index.at(a.bus));
            f.creation_time = c.created;
            f.carried = c;
            const std::uint32_t port = gw.can_port.at(a.bus);
            CanBus* bus = buses.at(a.bus).get();
            sim.kernel_.schedule_in(processing(g), gw.module, EventKind::Deliver,
                                    [bus, port, f] { bus->submit(port, f); });
            return;
        }
        PoolEntry e;
        e.frame.id = rec.id;
        e.frame.payload_len = rec.dlc;
        e.frame.payload = rec.data;
        e.frame.creation_time = c.created;
        e.frame.carried = c;
        e.holdup = a.holdup;
        e.dst = a.dst;
        e.tag = a.tag;
        if (!a.pool.empty()) {
            gw.pools.at(a.pool)->insert(std::move(e));
            return;
        }
        e.arrival = sim.kernel_.now();
        std::vector<PoolEntry> single;
        single.push_back(std::move(e));
        send_aggregates(g, std::move(single));
    }

    void pool_flush(std::uint32_t g, const std::string& pool, std::vector<PoolEntry> entries, SimTime now)
    {
        auto& gw = devices[g];
        for (const auto& e : entries) {
            const auto& c = e.frame.carried;
            sim.residences_.push_back(PoolResidence{gw.spec->name, pool, c.message, c.instance, e.arrival, now, e.holdup});
            auto it = gw.residence_series.find(c.message);
            if (it == gw.residence_series.end()) {
                it = gw.residence_series
                         .emplace(c.message, sim.metrics_.series(gw.spec->name,
                                                                 "poolResidence[" + cfg.messages[c.message].name + "]"))
                         .first;
            }
            sim.metrics_.append(it->second, now, seconds(now - e.arrival));
        }
        send_aggregates(g, std::move(entries));
    }

    void send_aggregates(std::uint32_t g, std::vector<PoolEntry> entries)
    {
        auto& gw = devices[g];
        for (auto& group : group_for_frames(std::move(entries))) {
            std::vector<CanRecord> records;
            records.reserve(group.entries.size());
            for (const auto& e : group.entries) {
                CanRecord r;
                r.id = e.frame.id;
                r.dlc = e.frame.payload_len;
                r.data = e.frame.payload;
                records.push_back(r);
            }
            std::size_t next = 0;
            for (auto& payload : encode_aggregate(records)) {
                const std::size_t count = (static_cast<std::size_t>(payload[0]) << 8) | payload[1];
                EthFrame f;
                f.src = g;
                f.dst = group.dst;
                f.payload_len = static_cast<int>(payload.size());
                f.tag = group.tag;
                f.creation_time = sim.kernel_.now();
                for (std::size_t i = 0; i < count; ++i) {
                    f.carried.push_back(group.entries[next + i].frame.carried);
                }
                next += count;
                f.aggregate = std::move(payload);
                f.serial = serial++;
                sim.kernel_.schedule_in(processing(g), gw.module, EventKind::Deliver,
                                        [this, g, f = std::move(f)]() mutable { eth_send(g, std::move(f), std::nullopt); });
            }
        }
    }

    // -----------------------------------------------------------------------
    // Results

    void finish()
    {
        auto& rep = sim.report_;
        const auto window = sim.options_.window.value_or(std::pair{SimTime::zero(), sim.options_.horizon});
        auto bandwidth = [&](const VectorSeries* v) {
            return v && window.second > window.first ? utilized_bandwidth(*v, window.first, window.second) : 0.0;
        };
        std::map<std::string, SegmentStats> segs;
        for (const auto& b : cfg.buses) {
            const auto& bus = *buses.at(b.name);
            auto& s = segs[b.segment];
            s.name = b.segment;
            s.frames_sent += bus.frames_sent();
            s.frames_received += bus.frames_delivered();
            s.frames_dropped += bus.frames_overwritten();
            s.bits_sent += bus.bits_sent();
            sim.metrics_.set_scalar(b.name, "bitsPerSec", bandwidth(sim.metrics_.find_vector(b.name, "txBits")),
                                    "bit/s");
        }
        for (std::size_t i = 0; i < ports.size(); ++i) {
            const auto& p = *ports[i];
            const auto& spec = cfg.derived.ports[i];
            const auto* link = cfg.find_link(spec.link);
            auto& s = segs[link->segment];
            s.name = link->segment;
            s.frames_sent += p.frames_sent();
            s.frames_received += p.frames_sent();
            s.frames_dropped += p.drops();
            s.bits_sent += p.bits_sent();
            sim.metrics_.set_scalar(p.device(), "bitsPerSec[" + p.peer() + "]",
                                    bandwidth(sim.metrics_.find_vector(p.device(), "txBits[" + p.peer() + "]")),
                                    "bit/s");
        }
        for (auto& [name, s] : segs) {
            rep.segments.push_back(s);
        }
        for (std::size_t m = 0; m < cfg.messages.size(); ++m) {
            const auto& st = rep.messages[m];
            sim.metrics_.set_scalar(cfg.messages[m].sender, "sent[" + st.name + "]", static_cast<double>(st.released),
                                    "frames");
        }
        for (const auto& s : sim.samples_) {
            sim.metrics_.add_scalar(cfg.devices[s.sink].name, "received[" + cfg.messages[s.message].name + "]", 1.0,
                                    "frames");
        }
    }
};

Simulation::Simulation(const NetworkConfig& cfg, RunOptions options)
    : cfg_(cfg), options_(std::move(options)), kernel_(options_.seed)
{
    if (options_.horizon <= SimTime::zero()) {
        throw InvalidArgument("horizon must be positive");
    }
    if (options_.window && options_.window->second <= options_.window->first) {
        throw InvalidArgument("bandwidth window must satisfy t0 < t1");
    }
    // The derived part must be consistent with the declarative part.
    Diagnostics diags;
    derive(cfg_, diags);
    if (diags.has_errors()) {
        throw InternalConsistency("configuration does not validate:\n" + diags.format("<config>"));
    }
    kernel_.enable_trace(options_.trace_events);
    report_.messages.resize(cfg_.messages.size());
    for (std::size_t m = 0; m < cfg_.messages.size(); ++m) {
        report_.messages[m].name = cfg_.messages[m].name;
    }
    impl_ = std::make_unique<Impl>(*this);
    impl_->build();
}

Simulation::~Simulation() = default;

const RunReport& Simulation::run()
{
    if (ran_) {
        throw InvalidArgument("a simulation runs only once");
    }
    ran_ = true;
    report_.kernel = kernel_.run_until(options_.horizon);
    if (options_.drain && kernel_.pending() > 0) {
        const auto more = kernel_.run_until(options_.horizon + cfg_.sim.drain_cap);
        report_.kernel.events_dispatched += more.events_dispatched;
        if (more.events_dispatched > 0) {
            report_.kernel.last_event_time = more.last_event_time;
        }
        report_.kernel.final_time = kernel_.pending() > 0
                                        ? more.final_time
                                        : std::max(options_.horizon, report_.kernel.last_event_time);
    }
    impl_->finish();
    report_.trace_hash = options_.trace_events ? kernel_.trace_hash() : 0;
    return report_;
}

const EgressPort* Simulation::port(std::string_view device, std::string_view peer) const
{
    for (std::size_t i = 0; i < impl_->ports.size(); ++i) {
        const auto& p = *impl_->ports[i];
        if (p.device() == device && p.peer() == peer) {
            return &p;
        }
    }
    return nullptr;
}

std::vector<const EgressPort*> Simulation::ports() const
{
    std::vector<const EgressPort*> out;
    for (const auto& p : impl_->ports) {
        out.push_back(p.get());
    }
    return out;
}

const CanBus* Simulation::bus(std::string_view name) const
{
    auto it = impl_->buses.find(std::string(name));
    return it == impl_->buses.end() ? nullptr : it->second.get();
}

const PoolTimer* Simulation::pool(std::string_view gateway, std::string_view pool) const
{
    auto g = cfg_.device_index(gateway);
    if (!g) {
        return nullptr;
    }
    const auto& pools = impl_->devices[*g].pools;
    auto it = pools.find(std::string(pool));
    return it == pools.end() ? nullptr : it->second.get();
}

std::vector<LatencySample> Simulation::samples_for(std::string_view message, std::string_view sink) const
{
    std::vector<LatencySample> out;
    auto m = cfg_.message_index(message);
    auto d = cfg_.device_index(sink);
    if (!m || !d) {
        return out;
    }
    for (const auto& s : samples_) {
        if (s.message == *m && s.sink == *d) {
            out.push_back(s);
        }
    }
    return out;
}

std::string format_report(const NetworkConfig& cfg, const RunReport& report)
{
    std::ostringstream os;
    os << "network " << cfg.network << ": " << report.kernel.events_dispatched << " events, final time "
       << format_time(report.kernel.final_time) << "\n";
    os << "segment            sent   received    dropped\n";
    for (const auto& s : report.segments) {
        char line[160];
        std::snprintf(line, sizeof line, "%-14s %8llu %10llu %10llu\n", s.name.c_str(),
                      static_cast<unsigned long long>(s.frames_sent), static_cast<unsigned long long>(s.frames_received),
                      static_cast<unsigned long long>(s.frames_dropped));
        os << line;
    }
    os << "message        released  delivered    dropped   min latency   max latency  mean latency\n";
    for (const auto& m : report.messages) {
        std::string mean = "-";
        if (m.delivered) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3fus",
                          static_cast<double>(m.total_latency.ticks()) / 1e6 / static_cast<double>(m.delivered));
            mean = buf;
        }
        char line[256];
        std::snprintf(line, sizeof line, "%-14s %8llu %10llu %10llu %13s %13s %13s\n", m.name.c_str(),
                      static_cast<unsigned long long>(m.released), static_cast<unsigned long long>(m.delivered),
                      static_cast<unsigned long long>(m.dropped),
                      m.min_latency ? format_time(*m.min_latency).c_str() : "-",
                      m.max_latency ? format_time(*m.max_latency).c_str() : "-", mean.c_str());
        os << line;
    }
    if (report.unknown_destination || report.no_route || report.tt_violations) {
        os << "unknown destination " << report.unknown_destination << ", no route " << report.no_route
           << ", TT violations " << report.tt_violations << "\n";
    }
    return os.str();
}

} // namespace ivnsim
