#include "ivnsim/config.hpp"

#include "ivnsim/error.hpp"

#include <nlohmann/json.hpp>

namespace ivnsim {

using nlohmann::json;

namespace {

std::string_view to_string(BindingKind k)
{
    switch (k) {
    case BindingKind::Can: return "can";
    case BindingKind::Tt: return "tt";
    case BindingKind::Avb: return "avb";
    case BindingKind::Rc: return "rc";
    case BindingKind::Be: return "be";
    case BindingKind::Pool: return "pool";
    }
    return "?";
}

std::string_view to_string(CanTxBufferMode m)
{
    return m == CanTxBufferMode::Fifo ? "fifo" : "overwrite";
}

json tag_json(const ClassTag& t)
{
    json j;
    j["class"] = std::string(to_string(t.cls));
    j["id"] = t.id;
    j["priority"] = t.priority;
    if (t.cls == TrafficClass::RC) {
        j["bag"] = format_time(t.bag);
    }
    return j;
}

json binding_json(const Binding& b)
{
    json j;
    j["kind"] = std::string(to_string(b.kind));
    switch (b.kind) {
    case BindingKind::Can:
    case BindingKind::Tt: j["id"] = b.id; break;
    case BindingKind::Avb:
        j["id"] = b.id;
        j["class"] = b.class_b ? "B" : "A";
        break;
    case BindingKind::Rc:
        j["id"] = b.id;
        j["bag"] = format_time(b.bag);
        j["priority"] = b.priority;
        break;
    case BindingKind::Be: j["priority"] = b.priority; break;
    case BindingKind::Pool:
        j["pool"] = b.pool;
        if (b.holdup) {
            j["holdUp"] = format_time(*b.holdup);
        }
        break;
    }
    return j;
}

json action_json(const RouteAction& a)
{
    json j;
    if (a.kind == RouteAction::Kind::ToCan) {
        j["kind"] = "can";
        j["bus"] = a.bus;
        j["id"] = a.can_id;
    } else {
        j["kind"] = "ethernet";
        j["pool"] = a.pool;
        j["holdUp"] = format_time(a.holdup);
        j["tag"] = tag_json(a.tag);
        j["dst"] = a.dst;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Reading

[[noreturn]] void fail(const std::string& what)
{
    throw ConfigError("config document: " + what);
}

const json& member(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        fail(std::string("missing '") + key + "'");
    }
    return j.at(key);
}

std::string get_string(const json& j, const char* key)
{
    const auto& v = member(j, key);
    if (!v.is_string()) {
        fail(std::string("'") + key + "' must be a string");
    }
    return v.get<std::string>();
}

std::int64_t get_int(const json& j, const char* key)
{
    const auto& v = member(j, key);
    if (!v.is_number_integer()) {
        fail(std::string("'") + key + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

bool get_bool(const json& j, const char* key)
{
    const auto& v = member(j, key);
    if (!v.is_boolean()) {
        fail(std::string("'") + key + "' must be a boolean");
    }
    return v.get<bool>();
}

SimTime get_time(const json& j, const char* key)
{
    const auto s = get_string(j, key);
    auto t = parse_time(s);
    if (!t) {
        fail(std::string("'") + key + "' is not a time: " + s);
    }
    return *t;
}

std::vector<std::string> get_strings(const json& j, const char* key)
{
    const auto& v = member(j, key);
    if (!v.is_array()) {
        fail(std::string("'") + key + "' must be an array");
    }
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) {
            fail(std::string("'") + key + "' must hold strings");
        }
        out.push_back(e.get<std::string>());
    }
    return out;
}

const json& get_array(const json& j, const char* key)
{
    const auto& v = member(j, key);
    if (!v.is_array()) {
        fail(std::string("'") + key + "' must be an array");
    }
    return v;
}

DeviceKind parse_kind(const std::string& s)
{
    if (s == "node") {
        return DeviceKind::Node;
    }
    if (s == "switch") {
        return DeviceKind::Switch;
    }
    if (s == "gateway") {
        return DeviceKind::Gateway;
    }
    fail("unknown device kind '" + s + "'");
}

CanTxBufferMode parse_mode(const std::string& s)
{
    if (s == "fifo") {
        return CanTxBufferMode::Fifo;
    }
    if (s == "overwrite") {
        return CanTxBufferMode::Overwrite;
    }
    fail("unknown CAN transmit buffer mode '" + s + "'");
}

Binding parse_binding(const json& j)
{
    Binding b;
    const auto kind = get_string(j, "kind");
    if (kind == "can" || kind == "tt") {
        b.kind = kind == "can" ? BindingKind::Can : BindingKind::Tt;
        b.id = static_cast<std::int32_t>(get_int(j, "id"));
    } else if (kind == "avb") {
        b.kind = BindingKind::Avb;
        b.id = static_cast<std::int32_t>(get_int(j, "id"));
        const auto cls = get_string(j, "class");
        if (cls != "A" && cls != "B") {
            fail("avb class must be A or B");
        }
        b.class_b = cls == "B";
    } else if (kind == "rc") {
        b.kind = BindingKind::Rc;
        b.id = static_cast<std::int32_t>(get_int(j, "id"));
        b.bag = get_time(j, "bag");
        b.priority = static_cast<std::int32_t>(get_int(j, "priority"));
    } else if (kind == "be") {
        b.kind = BindingKind::Be;
        b.priority = static_cast<std::int32_t>(get_int(j, "priority"));
    } else if (kind == "pool") {
        b.kind = BindingKind::Pool;
        b.pool = get_string(j, "pool");
        if (j.contains("holdUp")) {
            b.holdup = get_time(j, "holdUp");
        }
    } else {
        fail("unknown binding kind '" + kind + "'");
    }
    return b;
}

} // namespace

std::string to_json(const NetworkConfig& cfg)
{
    json root;
    root["network"] = cfg.network;
    root["inlineIni"] = cfg.inline_ini;
    json overrides = json::array();
    for (const auto& [k, v] : cfg.applied_overrides) {
        overrides.push_back(json::array({k, v}));
    }
    root["overrides"] = overrides;

    json sim;
    sim["queueCapacity"] = cfg.sim.queue_capacity;
    sim["ttTolerance"] = format_time(cfg.sim.tt_tolerance);
    json prec = json::array();
    for (auto c : cfg.sim.precedence) {
        prec.push_back(std::string(to_string(c)));
    }
    sim["precedence"] = prec;
    sim["canTxBuffer"] = std::string(to_string(cfg.sim.can_tx_buffer));
    sim["drainCap"] = format_time(cfg.sim.drain_cap);
    sim["tdmaCycleCap"] = format_time(cfg.sim.cycle_cap);
    root["sim"] = sim;

    json metrics;
    metrics["latency"] = cfg.metrics.latency;
    metrics["queueLength"] = cfg.metrics.queue_length;
    metrics["credit"] = cfg.metrics.credit;
    metrics["departures"] = cfg.metrics.departures;
    metrics["txBits"] = cfg.metrics.tx_bits;
    metrics["stations"] = cfg.metrics.stations;
    root["metrics"] = metrics;

    json devices = json::array();
    for (const auto& d : cfg.devices) {
        json j;
        j["name"] = d.name;
        j["kind"] = std::string(to_string(d.kind));
        j["drift"] = json{{"num", d.drift.num}, {"den", d.drift.den}};
        j["hardwareDelay"] = format_time(d.hardware_delay);
        j["processingDelay"] = format_time(d.processing_delay);
        j["processingJitter"] = format_time(d.processing_jitter);
        j["holdUpPolicy"] = std::string(to_string(d.holdup_policy));
        if (d.can_tx_buffer) {
            j["canTxBuffer"] = std::string(to_string(*d.can_tx_buffer));
        }
        if (d.queue_capacity) {
            j["queueCapacity"] = *d.queue_capacity;
        }
        j["pools"] = d.pools;
        devices.push_back(std::move(j));
    }
    root["devices"] = devices;

    json links = json::array();
    for (const auto& l : cfg.links) {
        links.push_back(json{{"name", l.name}, {"segment", l.segment}, {"a", l.a}, {"b", l.b}, {"bandwidth", l.rate}});
    }
    root["links"] = links;

    json buses = json::array();
    for (const auto& b : cfg.buses) {
        buses.push_back(json{{"name", b.name},
                             {"segment", b.segment},
                             {"bandwidth", b.bitrate},
                             {"stuffing", b.stuffing},
                             {"attached", b.attached}});
    }
    root["buses"] = buses;

    json messages = json::array();
    for (const auto& m : cfg.messages) {
        json j;
        j["name"] = m.name;
        j["sender"] = m.sender;
        j["receivers"] = m.receivers;
        j["payload"] = m.payload;
        j["period"] = format_time(m.period);
        j["offset"] = format_time(m.offset);
        j["releaseJitter"] = format_time(m.release_jitter);
        j["multicast"] = m.multicast;
        json mapping = json::array();
        for (const auto& e : m.mapping) {
            json me;
            me["target"] = e.target;
            if (e.binding) {
                me["binding"] = binding_json(*e.binding);
            }
            mapping.push_back(std::move(me));
        }
        j["mapping"] = mapping;
        messages.push_back(std::move(j));
    }
    root["messages"] = messages;

    const auto& dc = cfg.derived;
    json derived;
    json addresses = json::array();
    for (std::size_t i = 0; i < dc.addresses.size(); ++i) {
        const auto& a = dc.addresses[i];
        json j{{"index", i}, {"name", a.name}};
        if (a.device == kNoDevice) {
            j["exits"] = a.exits;
        }
        addresses.push_back(std::move(j));
    }
    derived["addresses"] = addresses;
    json ports = json::array();
    for (const auto& p : dc.ports) {
        ports.push_back(json{{"device", p.device},
                             {"peer", p.peer},
                             {"link", p.link},
                             {"rate", p.rate},
                             {"queueCapacity", p.queue_capacity},
                             {"idleSlopeA", p.idle_slope_a},
                             {"idleSlopeB", p.idle_slope_b}});
    }
    derived["ports"] = ports;
    json forwarding = json::array();
    for (const auto& f : dc.forwarding) {
        json j{{"device", f.device}, {"address", f.address}, {"peers", f.peers}};
        if (f.src != kNoDevice) {
            j["src"] = f.src;
        }
        forwarding.push_back(std::move(j));
    }
    derived["forwarding"] = forwarding;
    json rules = json::array();
    for (const auto& r : dc.rules) {
        rules.push_back(
            json{{"gateway", r.gateway}, {"ingress", r.ingress}, {"key", r.key}, {"action", action_json(r.action)}});
    }
    derived["rules"] = rules;
    json filters = json::array();
    for (const auto& f : dc.filters) {
        filters.push_back(json{{"bus", f.bus}, {"device", f.device}, {"id", f.can_id}});
    }
    derived["canFilters"] = filters;
    json sources = json::array();
    for (const auto& s : dc.sources) {
        json j{{"message", cfg.messages.at(s.message).name},
               {"device", s.device},
               {"period", format_time(s.period)},
               {"offset", format_time(s.offset)},
               {"releaseJitter", format_time(s.release_jitter)}};
        if (s.can) {
            j["bus"] = s.bus;
            j["id"] = s.can_id;
        } else {
            j["tag"] = tag_json(s.tag);
            j["dst"] = s.dst;
            j["payload"] = s.payload;
        }
        sources.push_back(std::move(j));
    }
    derived["sources"] = sources;
    json windows = json::array();
    for (const auto& w : dc.schedule.windows) {
        windows.push_back(json{{"ctID", w.ct_id},
                               {"link", w.link},
                               {"offset", format_time(w.offset)},
                               {"duration", format_time(w.duration)}});
    }
    derived["schedule"] = json{{"cycle", format_time(dc.schedule.cycle_length)}, {"windows", windows}};
    root["derived"] = derived;

    return root.dump(2) + "\n";
}

NetworkConfig config_from_json(std::string_view text, Diagnostics& diags)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config document is not valid JSON: ") + e.what());
    }
    NetworkConfig cfg;
    try {
        cfg.network = get_string(root, "network");
        cfg.inline_ini = get_string(root, "inlineIni");
        for (const auto& o : get_array(root, "overrides")) {
            if (!o.is_array() || o.size() != 2 || !o[0].is_string() || !o[1].is_string()) {
                fail("overrides must be [key, value] pairs");
            }
            cfg.applied_overrides.emplace_back(o[0].get<std::string>(), o[1].get<std::string>());
        }

        const auto& sim = member(root, "sim");
        cfg.sim.queue_capacity = static_cast<int>(get_int(sim, "queueCapacity"));
        cfg.sim.tt_tolerance = get_time(sim, "ttTolerance");
        cfg.sim.precedence.clear();
        for (const auto& c : get_strings(sim, "precedence")) {
            auto tc = parse_traffic_class(c);
            if (!tc) {
                fail("unknown traffic class '" + c + "'");
            }
            cfg.sim.precedence.push_back(*tc);
        }
        cfg.sim.can_tx_buffer = parse_mode(get_string(sim, "canTxBuffer"));
        cfg.sim.drain_cap = get_time(sim, "drainCap");
        cfg.sim.cycle_cap = get_time(sim, "tdmaCycleCap");

        const auto& metrics = member(root, "metrics");
        cfg.metrics.latency = get_bool(metrics, "latency");
        cfg.metrics.queue_length = get_bool(metrics, "queueLength");
        cfg.metrics.credit = get_bool(metrics, "credit");
        cfg.metrics.departures = get_bool(metrics, "departures");
        cfg.metrics.tx_bits = get_bool(metrics, "txBits");
        cfg.metrics.stations = get_bool(metrics, "stations");

        for (const auto& j : get_array(root, "devices")) {
            DeviceSpec d;
            d.name = get_string(j, "name");
            d.kind = parse_kind(get_string(j, "kind"));
            const auto& drift = member(j, "drift");
            d.drift = Ppm{get_int(drift, "num"), get_int(drift, "den")};
            if (d.drift.den <= 0) {
                fail("drift denominator must be positive");
            }
            d.hardware_delay = get_time(j, "hardwareDelay");
            d.processing_delay = get_time(j, "processingDelay");
            d.processing_jitter = get_time(j, "processingJitter");
            auto policy = parse_holdup_policy(get_string(j, "holdUpPolicy"));
            if (!policy) {
                fail("unknown hold-up policy for " + d.name);
            }
            d.holdup_policy = *policy;
            if (j.contains("canTxBuffer")) {
                d.can_tx_buffer = parse_mode(get_string(j, "canTxBuffer"));
            }
            if (j.contains("queueCapacity")) {
                d.queue_capacity = static_cast<int>(get_int(j, "queueCapacity"));
            }
            d.pools = get_strings(j, "pools");
            cfg.devices.push_back(std::move(d));
        }
        for (const auto& j : get_array(root, "links")) {
            cfg.links.push_back(EthLinkSpec{get_string(j, "name"), get_string(j, "segment"), get_string(j, "a"),
                                            get_string(j, "b"), get_int(j, "bandwidth"), {}});
        }
        for (const auto& j : get_array(root, "buses")) {
            cfg.buses.push_back(CanBusSpec{get_string(j, "name"), get_string(j, "segment"), get_int(j, "bandwidth"),
                                           get_bool(j, "stuffing"), get_strings(j, "attached"), {}});
        }
        for (const auto& j : get_array(root, "messages")) {
            MessageSpec m;
            m.name = get_string(j, "name");
            m.sender = get_string(j, "sender");
            m.receivers = get_strings(j, "receivers");
            m.payload = static_cast<int>(get_int(j, "payload"));
            m.period = get_time(j, "period");
            m.offset = get_time(j, "offset");
            m.release_jitter = get_time(j, "releaseJitter");
            m.multicast = get_bool(j, "multicast");
            for (const auto& e : get_array(j, "mapping")) {
                MappingEntry me;
                me.target = get_string(e, "target");
                if (e.contains("binding")) {
                    me.binding = parse_binding(e.at("binding"));
                }
                m.mapping.push_back(std::move(me));
            }
            cfg.messages.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        fail(e.what());
    }
    derive(cfg, diags);
    return cfg;
}

} // namespace ivnsim
