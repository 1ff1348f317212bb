#include "ivnsim/config.hpp"

#include "ivnsim/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace ivnsim {

std::string_view to_string(DeviceKind k) noexcept
{
    switch (k) {
    case DeviceKind::Node: return "node";
    case DeviceKind::Switch: return "switch";
    case DeviceKind::Gateway: return "gateway";
    }
    return "?";
}

const DeviceSpec* NetworkConfig::find_device(std::string_view name) const
{
    auto it = std::find_if(devices.begin(), devices.end(), [&](const auto& d) { return d.name == name; });
    return it == devices.end() ? nullptr : &*it;
}

std::optional<std::uint32_t> NetworkConfig::device_index(std::string_view name) const
{
    auto it = std::find_if(devices.begin(), devices.end(), [&](const auto& d) { return d.name == name; });
    if (it == devices.end()) {
        return std::nullopt;
    }
    return static_cast<std::uint32_t>(it - devices.begin());
}

const EthLinkSpec* NetworkConfig::find_link(std::string_view name) const
{
    auto it = std::find_if(links.begin(), links.end(), [&](const auto& l) { return l.name == name; });
    return it == links.end() ? nullptr : &*it;
}

const CanBusSpec* NetworkConfig::find_bus(std::string_view name) const
{
    auto it = std::find_if(buses.begin(), buses.end(), [&](const auto& b) { return b.name == name; });
    return it == buses.end() ? nullptr : &*it;
}

std::optional<std::uint32_t> NetworkConfig::message_index(std::string_view name) const
{
    auto it = std::find_if(messages.begin(), messages.end(), [&](const auto& m) { return m.name == name; });
    if (it == messages.end()) {
        return std::nullopt;
    }
    return static_cast<std::uint32_t>(it - messages.begin());
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

std::optional<bool> parse_bool(std::string_view v)
{
    if (v == "true" || v == "on" || v == "yes" || v == "1") {
        return true;
    }
    if (v == "false" || v == "off" || v == "no" || v == "0") {
        return false;
    }
    return std::nullopt;
}

std::optional<std::int64_t> parse_int(std::string_view v)
{
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        return std::nullopt;
    }
    return out;
}

std::optional<CanTxBufferMode> parse_buffer_mode(std::string_view v)
{
    if (v == "fifo") {
        return CanTxBufferMode::Fifo;
    }
    if (v == "overwrite") {
        return CanTxBufferMode::Overwrite;
    }
    return std::nullopt;
}

std::optional<std::vector<TrafficClass>> parse_precedence(std::string_view v)
{
    std::vector<TrafficClass> out;
    while (!v.empty()) {
        const auto comma = v.find(',');
        auto item = trim(v.substr(0, comma));
        auto c = parse_traffic_class(item);
        if (!c || *c == TrafficClass::TT || std::find(out.begin(), out.end(), *c) != out.end()) {
            return std::nullopt;
        }
        out.push_back(*c);
        v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
    }
    if (out.size() != 4) {
        return std::nullopt;
    }
    return out;
}

template <class T, class Parse>
void set_value(T& field, Parse parse, std::string_view what, std::string_view value, Diagnostics& diags,
               SourcePos pos)
{
    if (auto v = parse(value)) {
        field = *v;
    } else {
        diags.error("invalid value '" + std::string(value) + "' for " + std::string(what), pos);
    }
}

auto nonneg_time = [](std::string_view v) -> std::optional<SimTime> {
    auto t = parse_time(v);
    if (t && *t >= SimTime::zero()) {
        return t;
    }
    return std::nullopt;
};
auto positive_time = [](std::string_view v) -> std::optional<SimTime> {
    auto t = parse_time(v);
    if (t && *t > SimTime::zero()) {
        return t;
    }
    return std::nullopt;
};
auto positive_int = [](std::string_view v) -> std::optional<int> {
    auto i = parse_int(v);
    if (i && *i > 0 && *i <= 1'000'000) {
        return static_cast<int>(*i);
    }
    return std::nullopt;
};
auto positive_rate = [](std::string_view v) -> std::optional<std::int64_t> {
    auto r = parse_rate(v);
    if (r && *r > 0) {
        return r;
    }
    return std::nullopt;
};

} // namespace

void apply_device_param(DeviceSpec& d, std::string_view name, std::string_view value, Diagnostics& diags,
                        SourcePos pos)
{
    value = trim(value);
    const std::string what = d.name + "." + std::string(name);
    if (name == "drift") {
        auto p = parse_ppm(value);
        if (p && static_cast<__int128>(p->num) * p->num < static_cast<__int128>(p->den) * p->den * 1'000'000'000'000) {
            d.drift = *p;
        } else {
            diags.error("invalid value '" + std::string(value) + "' for " + what, pos);
        }
    } else if (name == "hardwareDelay") {
        set_value(d.hardware_delay, nonneg_time, what, value, diags, pos);
    } else if (name == "processingDelay") {
        set_value(d.processing_delay, nonneg_time, what, value, diags, pos);
    } else if (name == "processingJitter") {
        set_value(d.processing_jitter, nonneg_time, what, value, diags, pos);
    } else if (name == "holdUpPolicy") {
        set_value(d.holdup_policy, parse_holdup_policy, what, value, diags, pos);
    } else if (name == "canTxBuffer") {
        if (auto m = parse_buffer_mode(value)) {
            d.can_tx_buffer = m;
        } else {
            diags.error("invalid value '" + std::string(value) + "' for " + what, pos);
        }
    } else if (name == "queueCapacity") {
        if (auto c = positive_int(value)) {
            d.queue_capacity = c;
        } else {
            diags.error("invalid value '" + std::string(value) + "' for " + what, pos);
        }
    } else {
        diags.warning("unknown parameter '" + std::string(name) + "' on " + d.name + " ignored", pos);
    }
}

void apply_link_param(EthLinkSpec& l, std::string_view name, std::string_view value, Diagnostics& diags,
                      SourcePos pos)
{
    value = trim(value);
    if (name == "bandwidth") {
        set_value(l.rate, positive_rate, l.name + ".bandwidth", value, diags, pos);
    } else {
        diags.warning("unknown parameter '" + std::string(name) + "' on " + l.name + " ignored", pos);
    }
}

void apply_bus_param(CanBusSpec& b, std::string_view name, std::string_view value, Diagnostics& diags,
                     SourcePos pos)
{
    value = trim(value);
    if (name == "bandwidth") {
        set_value(b.bitrate, positive_rate, b.name + ".bandwidth", value, diags, pos);
    } else if (name == "stuffing") {
        set_value(b.stuffing, parse_bool, b.name + ".stuffing", value, diags, pos);
    } else {
        diags.warning("unknown parameter '" + std::string(name) + "' on " + b.name + " ignored", pos);
    }
}

void apply_override(NetworkConfig& cfg, std::string_view key, std::string_view value, Diagnostics& diags,
                    SourcePos pos)
{
    key = trim(key);
    value = trim(value);
    const auto dot = key.find('.');
    if (dot == std::string_view::npos) {
        diags.warning("unknown override key '" + std::string(key) + "' ignored", pos);
        return;
    }
    const auto head = key.substr(0, dot);
    const auto tail = key.substr(dot + 1);
    const std::string what(key);
    const std::size_t before = diags.items().size();

    auto unknown = [&] { diags.warning("unknown override key '" + what + "' ignored", pos); };

    if (head == "sim") {
        auto& s = cfg.sim;
        if (tail == "queueCapacity") {
            set_value(s.queue_capacity, positive_int, what, value, diags, pos);
        } else if (tail == "ttTolerance") {
            set_value(s.tt_tolerance, nonneg_time, what, value, diags, pos);
        } else if (tail == "precedence") {
            set_value(s.precedence, parse_precedence, what, value, diags, pos);
        } else if (tail == "canTxBuffer") {
            set_value(s.can_tx_buffer, parse_buffer_mode, what, value, diags, pos);
        } else if (tail == "drainCap") {
            set_value(s.drain_cap, nonneg_time, what, value, diags, pos);
        } else if (tail == "tdmaCycleCap") {
            set_value(s.cycle_cap, positive_time, what, value, diags, pos);
        } else {
            unknown();
        }
    } else if (head == "metrics") {
        auto& m = cfg.metrics;
        bool* flag = tail == "latency"        ? &m.latency
                     : tail == "queueLength"  ? &m.queue_length
                     : tail == "credit"       ? &m.credit
                     : tail == "departures"   ? &m.departures
                     : tail == "txBits"       ? &m.tx_bits
                     : tail == "stations"     ? &m.stations
                                              : nullptr;
        if (flag) {
            set_value(*flag, parse_bool, what, value, diags, pos);
        } else {
            unknown();
        }
    } else if (auto d = std::find_if(cfg.devices.begin(), cfg.devices.end(), [&](auto& x) { return x.name == head; });
               d != cfg.devices.end()) {
        apply_device_param(*d, tail, value, diags, pos);
    } else if (auto l = std::find_if(cfg.links.begin(), cfg.links.end(), [&](auto& x) { return x.name == head; });
               l != cfg.links.end()) {
        apply_link_param(*l, tail, value, diags, pos);
    } else if (auto b = std::find_if(cfg.buses.begin(), cfg.buses.end(), [&](auto& x) { return x.name == head; });
               b != cfg.buses.end()) {
        apply_bus_param(*b, tail, value, diags, pos);
    } else if (auto m = std::find_if(cfg.messages.begin(), cfg.messages.end(),
                                     [&](auto& x) { return x.name == head; });
               m != cfg.messages.end()) {
        if (tail == "period") {
            set_value(m->period, positive_time, what, value, diags, pos);
        } else if (tail == "offset") {
            set_value(m->offset, nonneg_time, what, value, diags, pos);
        } else if (tail == "releaseJitter") {
            set_value(m->release_jitter, nonneg_time, what, value, diags, pos);
        } else if (tail == "payload") {
            set_value(
                m->payload,
                [](std::string_view v) -> std::optional<int> {
                    auto b = parse_bytes(v);
                    if (b && *b >= 0 && *b <= 1'000'000) {
                        return static_cast<int>(*b);
                    }
                    return std::nullopt;
                },
                what, value, diags, pos);
        } else if (tail == "multicast") {
            set_value(m->multicast, parse_bool, what, value, diags, pos);
        } else {
            unknown();
        }
    } else {
        unknown();
    }
    if (diags.items().size() == before) {
        cfg.applied_overrides.emplace_back(std::string(key), std::string(value));
    }
}

void apply_ini(NetworkConfig& cfg, std::string_view text, Diagnostics& diags, SourcePos origin)
{
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const SourcePos pos{origin.line > 0 ? origin.line + line_no - 1 : 0, 1};
        line = trim(line);
        if (line.empty() || line.front() == '#' || line.front() == ';' || line.front() == '[') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            diags.warning("ignoring ini line without '=': " + std::string(line), pos);
            continue;
        }
        apply_override(cfg, line.substr(0, eq), line.substr(eq + 1), diags, pos);
    }
}

void derive_or_throw(NetworkConfig& cfg)
{
    Diagnostics diags;
    derive(cfg, diags);
    if (diags.has_errors()) {
        throw InternalConsistency("configuration is inconsistent:\n" + diags.format(cfg.network));
    }
}

} // namespace ivnsim
