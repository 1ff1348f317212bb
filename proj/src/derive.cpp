#include "ivnsim/config.hpp"

#include "ivnsim/error.hpp"
#include "ivnsim/schedule.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace ivnsim {

namespace {

constexpr std::uint32_t kNone = 0xFFFFFFFF;

struct EthAdj {
    std::uint32_t peer;
    std::uint32_t link;
};

struct Hop {
    std::uint32_t from;
    std::uint32_t to;
    bool eth;
    std::uint32_t medium; // link or bus index
};

struct Leg {
    bool eth = false;
    std::vector<Hop> hops;
    [[nodiscard]] std::uint32_t src() const { return hops.front().from; }
    [[nodiscard]] std::uint32_t dst() const { return hops.back().to; }
};

struct GroupInfo {
    std::string name;
    ClassTag tag;
    std::uint32_t address = 0;
    std::set<std::uint32_t> sources;
    std::set<std::uint32_t> exits;
    std::set<std::uint32_t> messages;
    bool from_gateway = false;
    SourcePos pos;
};

/// Per (message, group) entry and exit sets, checked for consistency.
struct Usage {
    std::set<std::uint32_t> sources;
    std::set<std::uint32_t> exits;
};

class Deriver {
public:
    Deriver(NetworkConfig& cfg, Diagnostics& diags) : cfg_(cfg), diags_(diags) {}

    void run()
    {
        cfg_.derived = DerivedConfig{};
        if (!index()) {
            return;
        }
        for (std::uint32_t m = 0; m < cfg_.messages.size(); ++m) {
            lower_message(m);
        }
        check_groups();
        if (diags_.has_errors()) {
            return;
        }
        build_addresses();
        build_ports();
        build_forwarding();
        reserve_avb();
        schedule_tt();
        finish_sources();
    }

private:
    // -----------------------------------------------------------------------
    // Indexing and structural checks

    bool index()
    {
        const std::size_t errors_before = diags_.error_count();
        std::map<std::string, std::string> names; // name -> namespace kind
        auto claim = [&](const std::string& name, std::string_view kind, SourcePos pos) {
            if (name.empty()) {
                diags_.error(std::string(kind) + " with an empty name", pos);
                return;
            }
            auto [it, inserted] = names.emplace(name, std::string(kind));
            if (!inserted) {
                diags_.error("duplicate name '" + name + "' (" + it->second + " and " + std::string(kind) + ")", pos);
            }
        };
        for (std::uint32_t i = 0; i < cfg_.devices.size(); ++i) {
            const auto& d = cfg_.devices[i];
            claim(d.name, to_string(d.kind), d.pos);
            dev_[d.name] = i;
            std::set<std::string> pools;
            for (const auto& p : d.pools) {
                if (d.kind != DeviceKind::Gateway) {
                    diags_.error("pool '" + p + "' declared on non-gateway " + d.name, d.pos);
                }
                if (!pools.insert(p).second) {
                    diags_.error("duplicate pool '" + p + "' on " + d.name, d.pos);
                }
            }
        }
        for (std::uint32_t i = 0; i < cfg_.links.size(); ++i) {
            claim(cfg_.links[i].name, "ethernetLink", cfg_.links[i].pos);
            link_[cfg_.links[i].name] = i;
        }
        for (std::uint32_t i = 0; i < cfg_.buses.size(); ++i) {
            claim(cfg_.buses[i].name, "canLink", cfg_.buses[i].pos);
            bus_[cfg_.buses[i].name] = i;
        }
        for (const auto& m : cfg_.messages) {
            if (m.name.empty()) {
                diags_.error("message with an empty name", m.pos);
            }
            segments_.insert(m.name); // messages live in their own namespace
        }
        segments_.clear();
        for (const auto& l : cfg_.links) {
            segments_.insert(l.segment);
        }
        for (const auto& b : cfg_.buses) {
            segments_.insert(b.segment);
        }
        {
            std::set<std::string> msgs;
            for (const auto& m : cfg_.messages) {
                if (!msgs.insert(m.name).second) {
                    diags_.error("duplicate message '" + m.name + "'", m.pos);
                }
            }
        }

        eth_adj_.assign(cfg_.devices.size(), {});
        dev_buses_.assign(cfg_.devices.size(), {});
        std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
        for (std::uint32_t i = 0; i < cfg_.links.size(); ++i) {
            const auto& l = cfg_.links[i];
            auto a = dev_.find(l.a);
            auto b = dev_.find(l.b);
            if (a == dev_.end() || b == dev_.end()) {
                diags_.error("link " + l.name + " connects unknown device '" + (a == dev_.end() ? l.a : l.b) + "'",
                             l.pos);
                continue;
            }
            if (a->second == b->second) {
                diags_.error("link " + l.name + " connects " + l.a + " to itself", l.pos);
                continue;
            }
            if (!pairs.insert(std::minmax(a->second, b->second)).second) {
                diags_.error("devices " + l.a + " and " + l.b + " are connected twice", l.pos);
                continue;
            }
            if (l.rate <= 0) {
                diags_.error("link " + l.name + " needs a positive bandwidth", l.pos);
            }
            eth_adj_[a->second].push_back({b->second, i});
            eth_adj_[b->second].push_back({a->second, i});
        }
        for (std::uint32_t i = 0; i < cfg_.buses.size(); ++i) {
            const auto& bus = cfg_.buses[i];
            if (bus.bitrate <= 0) {
                diags_.error("CAN bus " + bus.name + " needs a positive bandwidth", bus.pos);
            }
            std::set<std::uint32_t> seen;
            for (const auto& name : bus.attached) {
                auto d = dev_.find(name);
                if (d == dev_.end()) {
                    diags_.error("CAN bus " + bus.name + " attaches unknown device '" + name + "'", bus.pos);
                    continue;
                }
                if (cfg_.devices[d->second].kind == DeviceKind::Switch) {
                    diags_.error("switch " + name + " cannot attach to CAN bus " + bus.name, bus.pos);
                    continue;
                }
                if (!seen.insert(d->second).second) {
                    diags_.error(name + " is attached to CAN bus " + bus.name + " twice", bus.pos);
                    continue;
                }
                dev_buses_[d->second].push_back(i);
            }
        }
        return diags_.error_count() == errors_before;
    }

    // -----------------------------------------------------------------------
    // Paths

    /// Shortest hop path from `src` to `dst` over Ethernet links and CAN buses.
    /// End nodes never forward, switches only forward Ethernet, gateways do
    /// not forward Ethernet to Ethernet. Ties follow declaration order.
    std::optional<std::vector<Hop>> find_path(std::uint32_t src, std::uint32_t dst) const
    {
        const std::uint32_t n_dev = static_cast<std::uint32_t>(cfg_.devices.size());
        // states: device*2 + via_eth, then 2*n_dev + bus
        const std::uint32_t n_states = 2 * n_dev + static_cast<std::uint32_t>(cfg_.buses.size());
        struct Parent {
            std::uint32_t state = kNone;
            Hop hop{};
        };
        std::vector<Parent> parent(n_states);
        std::vector<bool> seen(n_states, false);
        std::deque<std::uint32_t> q;
        const std::uint32_t start = src * 2;
        seen[start] = true;
        q.push_back(start);
        std::optional<std::uint32_t> found;
        while (!q.empty() && !found) {
            const std::uint32_t s = q.front();
            q.pop_front();
            auto visit = [&](std::uint32_t next, Hop hop) {
                if (seen[next]) {
                    return;
                }
                seen[next] = true;
                parent[next] = Parent{s, hop};
                q.push_back(next);
            };
            if (s >= 2 * n_dev) {
                const std::uint32_t b = s - 2 * n_dev;
                const std::uint32_t from = parent[s].hop.from;
                for (const auto& name : cfg_.buses[b].attached) {
                    const std::uint32_t d = dev_.at(name);
                    if (d != from) {
                        visit(d * 2, Hop{from, d, false, b});
                    }
                }
                continue;
            }
            const std::uint32_t d = s / 2;
            const bool via_eth = (s % 2) == 1;
            if (d == dst) {
                found = s;
                break;
            }
            const auto kind = cfg_.devices[d].kind;
            bool eth_out = true;
            bool can_out = true;
            if (d != src) {
                if (kind == DeviceKind::Node) {
                    continue;
                }
                if (kind == DeviceKind::Switch) {
                    can_out = false;
                    eth_out = via_eth;
                }
                if (kind == DeviceKind::Gateway && via_eth) {
                    eth_out = false;
                }
            }
            if (eth_out) {
                for (const auto& a : eth_adj_[d]) {
                    visit(a.peer * 2 + 1, Hop{d, a.peer, true, a.link});
                }
            }
            if (can_out) {
                for (std::uint32_t b : dev_buses_[d]) {
                    const std::uint32_t bs = 2 * n_dev + b;
                    if (!seen[bs]) {
                        seen[bs] = true;
                        parent[bs] = Parent{s, Hop{d, kNone, false, b}};
                        q.push_back(bs);
                    }
                }
            }
        }
        if (!found) {
            return std::nullopt;
        }
        std::vector<Hop> hops;
        for (std::uint32_t s = *found; s != start;) {
            const auto& p = parent[s];
            if (s < 2 * n_dev) {
                hops.push_back(p.hop);
            }
            s = p.state;
        }
        std::reverse(hops.begin(), hops.end());
        return hops;
    }

    static std::vector<Leg> split_legs(const std::vector<Hop>& hops)
    {
        std::vector<Leg> legs;
        for (const auto& h : hops) {
            if (h.eth && !legs.empty() && legs.back().eth) {
                legs.back().hops.push_back(h);
            } else {
                legs.push_back(Leg{h.eth, {h}});
            }
        }
        return legs;
    }

    // -----------------------------------------------------------------------
    // Mapping lookup

    const MappingEntry* entry_for(const MessageSpec& m, const std::string& target)
    {
        for (const auto& e : m.mapping) {
            if (e.target == target) {
                used_targets_.insert(&e);
                return &e;
            }
        }
        return nullptr;
    }

    /// Binding for a link or bus: its own name first, then its segment.
    const MappingEntry* medium_entry(const MessageSpec& m, const std::string& name, const std::string& segment)
    {
        if (const auto* e = entry_for(m, name)) {
            return e;
        }
        return entry_for(m, segment);
    }

    static bool is_eth_binding(BindingKind k)
    {
        return k == BindingKind::Tt || k == BindingKind::Rc || k == BindingKind::Avb || k == BindingKind::Be;
    }

    static ClassTag tag_of(const Binding& b)
    {
        switch (b.kind) {
        case BindingKind::Tt: return ClassTag::tt(b.id);
        case BindingKind::Rc: return ClassTag::rc(b.id, b.bag, b.priority);
        case BindingKind::Avb: return ClassTag::avb(!b.class_b, b.id);
        case BindingKind::Be: return ClassTag::be(b.priority);
        default: return {};
        }
    }

    // -----------------------------------------------------------------------
    // Lowering one message

    struct LegBinding {
        std::optional<Binding> binding;
        std::uint32_t address = 0;
        std::string group; // empty for unicast
    };

    void lower_message(std::uint32_t mi)
    {
        const auto& m = cfg_.messages[mi];
        const std::size_t errors_before = diags_.error_count();
        auto err = [&](const std::string& text, SourcePos pos) { diags_.error("message " + m.name + ": " + text, pos); };

        if (m.period <= SimTime::zero()) {
            err("period must be positive", m.pos);
        }
        if (m.payload < 0) {
            err("payload must not be negative", m.pos);
        }
        if (m.offset < SimTime::zero() || m.release_jitter < SimTime::zero()) {
            err("offset and releaseJitter must not be negative", m.pos);
        }
        auto sender_it = dev_.find(m.sender);
        if (sender_it == dev_.end()) {
            err("unknown sender '" + m.sender + "'", m.pos);
            return;
        }
        if (cfg_.devices[sender_it->second].kind == DeviceKind::Switch) {
            err("a switch cannot send messages", m.pos);
            return;
        }
        if (m.receivers.empty()) {
            err("no receivers", m.pos);
            return;
        }
        for (const auto& e : m.mapping) {
            const bool known = dev_.count(e.target) || link_.count(e.target) || bus_.count(e.target) ||
                               segments_.count(e.target);
            if (!known) {
                err("mapping names unknown target '" + e.target + "'", e.pos);
                continue;
            }
            auto d = dev_.find(e.target);
            const bool is_gateway = d != dev_.end() && cfg_.devices[d->second].kind == DeviceKind::Gateway;
            if (!e.binding && !is_gateway) {
                err("bare mapping entry '" + e.target + "' must name a gateway", e.pos);
            }
            if (e.binding && e.binding->kind == BindingKind::Pool && !is_gateway) {
                err("pool binding on non-gateway '" + e.target + "'", e.pos);
            }
            if (e.binding && e.binding->kind != BindingKind::Pool && d != dev_.end()) {
                err("class binding on device '" + e.target + "'; bind segments, links or buses", e.pos);
            }
        }
        if (diags_.error_count() != errors_before) {
            return;
        }

        const std::uint32_t sender = sender_it->second;
        std::set<std::uint32_t> gateways_on_path;
        bool can_payload_reported = false;
        std::set<std::uint32_t> seen_receivers;

        for (const auto& rname : m.receivers) {
            auto r = dev_.find(rname);
            if (r == dev_.end()) {
                err("unknown receiver '" + rname + "'", m.pos);
                continue;
            }
            if (!seen_receivers.insert(r->second).second) {
                err("receiver '" + rname + "' listed twice", m.pos);
                continue;
            }
            if (r->second == sender) {
                err("sender cannot receive its own message", m.pos);
                continue;
            }
            if (cfg_.devices[r->second].kind == DeviceKind::Switch) {
                err("switch '" + rname + "' cannot be a receiver", m.pos);
                continue;
            }
            auto path = find_path(sender, r->second);
            if (!path) {
                err("receiver '" + rname + "' is unreachable from " + m.sender, m.pos);
                continue;
            }
            auto legs = split_legs(*path);

            // Resolve the binding of every leg.
            std::vector<LegBinding> lb(legs.size());
            bool ok = true;
            for (std::size_t i = 0; i < legs.size() && ok; ++i) {
                const auto& leg = legs[i];
                if (!leg.eth) {
                    const auto& bus = cfg_.buses[leg.hops.front().medium];
                    const auto* e = medium_entry(m, bus.name, bus.segment);
                    if (!e || !e->binding) {
                        err("no mapping for CAN bus " + bus.name + " (segment " + bus.segment + ")", m.pos);
                        ok = false;
                        break;
                    }
                    if (e->binding->kind != BindingKind::Can) {
                        err("CAN bus " + bus.name + " needs a can{} binding", e->pos);
                        ok = false;
                        break;
                    }
                    if (e->binding->id < 0 || e->binding->id > kCanMaxId) {
                        err("CAN id " + std::to_string(e->binding->id) + " exceeds 11 bits", e->pos);
                        ok = false;
                        break;
                    }
                    if (m.payload > kCanMaxPayload && !can_payload_reported) {
                        err("CAN payload exceeds 8 bytes", m.pos);
                        can_payload_reported = true;
                        ok = false;
                        break;
                    }
                    lb[i].binding = e->binding;
                    continue;
                }
                std::optional<Binding> first;
                for (const auto& h : leg.hops) {
                    const auto& link = cfg_.links[h.medium];
                    const auto* e = medium_entry(m, link.name, link.segment);
                    if (!e || !e->binding) {
                        err("no mapping for Ethernet link " + link.name + " (segment " + link.segment + ")", m.pos);
                        ok = false;
                        break;
                    }
                    if (!is_eth_binding(e->binding->kind)) {
                        err("Ethernet link " + link.name + " needs a tt, rc, avb or be binding", e->pos);
                        ok = false;
                        break;
                    }
                    if (first && !(*first == *e->binding)) {
                        err("links of one Ethernet path resolve to different bindings", e->pos);
                        ok = false;
                        break;
                    }
                    first = e->binding;
                }
                if (!ok) {
                    break;
                }
                const auto& b = *first;
                if (b.kind == BindingKind::Rc && b.bag <= SimTime::zero()) {
                    err("rc binding needs a positive bag", m.pos);
                    ok = false;
                    break;
                }
                if (b.kind == BindingKind::Be && (b.priority < 0 || b.priority > 7)) {
                    err("be priority must be 0..7", m.pos);
                    ok = false;
                    break;
                }
                const bool native = leg.src() == sender;
                if (native && m.payload > kEthMaxPayload) {
                    err("payload exceeds 1500 bytes on Ethernet", m.pos);
                    ok = false;
                    break;
                }
                lb[i].binding = b;
                const bool multicast = b.kind != BindingKind::Be || m.multicast;
                if (multicast) {
                    const ClassTag tag = tag_of(b);
                    std::string gname = b.kind == BindingKind::Be ? "be:" + m.name : class_key(tag);
                    auto& g = group(gname, tag, m.pos);
                    g.sources.insert(leg.src());
                    g.exits.insert(leg.dst());
                    g.messages.insert(mi);
                    g.from_gateway = g.from_gateway || !native;
                    auto& u = usage_[{gname, mi}];
                    u.sources.insert(leg.src());
                    u.exits.insert(leg.dst());
                    lb[i].group = gname;
                    if (b.kind == BindingKind::Avb) {
                        stream_class_[b.id].insert(b.class_b);
                    }
                    if (b.kind == BindingKind::Rc) {
                        vl_bag_[b.id].insert(b.bag.ticks());
                    }
                } else {
                    lb[i].address = leg.dst();
                    unicast_.insert(leg.dst());
                }
            }
            if (!ok) {
                continue;
            }

            // Sender emission.
            {
                SourceSpec s;
                s.message = mi;
                s.device = m.sender;
                s.period = m.period;
                s.offset = m.offset;
                s.release_jitter = m.release_jitter;
                if (!legs[0].eth) {
                    s.can = true;
                    s.bus = cfg_.buses[legs[0].hops.front().medium].name;
                    s.can_id = static_cast<std::uint16_t>(lb[0].binding->id);
                    note_can_id(s.bus, s.can_id, mi, m.pos);
                } else {
                    s.tag = tag_of(*lb[0].binding);
                    s.payload = std::max(m.payload, kEthMinPayload);
                    pending_dst_.push_back({cfg_.derived.sources.size(), lb[0].group, lb[0].address});
                }
                add_source(std::move(s));
            }

            // Gateway transitions.
            for (std::size_t i = 0; i + 1 < legs.size(); ++i) {
                const std::uint32_t g = legs[i].dst();
                const auto& gw = cfg_.devices[g];
                gateways_on_path.insert(g);
                const auto* ge = entry_for(m, gw.name);
                if (!ge) {
                    err("gateway " + gw.name + " is on the path to " + rname + " but not listed in the mapping",
                        m.pos);
                    continue;
                }
                RuleSpec rule;
                rule.gateway = gw.name;
                std::optional<std::int32_t> ingress_can_id;
                if (!legs[i].eth) {
                    const auto& bus = cfg_.buses[legs[i].hops.front().medium];
                    rule.ingress = bus.name;
                    ingress_can_id = lb[i].binding->id;
                    rule.key = can_key(static_cast<std::uint16_t>(*ingress_can_id));
                    cfg_.derived.filters.push_back(
                        CanFilterSpec{bus.name, gw.name, static_cast<std::uint16_t>(*ingress_can_id)});
                } else {
                    const std::uint32_t src = legs[i].src();
                    rule.ingress = "eth:" + cfg_.devices[src].name;
                    if (src == sender) {
                        rule.key = class_key(tag_of(*lb[i].binding));
                    } else {
                        // Aggregated records keep the CAN id of the bus they came from.
                        rule.key = can_key(static_cast<std::uint16_t>(lb[i - 1].binding->id));
                    }
                }
                auto& act = rule.action;
                if (!legs[i + 1].eth) {
                    const auto& bus = cfg_.buses[legs[i + 1].hops.front().medium];
                    act.kind = RouteAction::Kind::ToCan;
                    act.bus = bus.name;
                    act.can_id = static_cast<std::uint16_t>(lb[i + 1].binding->id);
                    note_can_id(bus.name, act.can_id, mi, m.pos);
                    if (ge->binding) {
                        diags_.warning("message " + m.name + ": pool binding at " + gw.name +
                                           " has no effect towards CAN bus " + bus.name,
                                       ge->pos);
                    }
                } else {
                    act.kind = RouteAction::Kind::ToEthernet;
                    act.tag = tag_of(*lb[i + 1].binding);
                    pending_rule_dst_.push_back({cfg_.derived.rules.size(), lb[i + 1].group, lb[i + 1].address});
                    if (ge->binding) {
                        const auto& pool = ge->binding->pool;
                        if (std::find(gw.pools.begin(), gw.pools.end(), pool) == gw.pools.end()) {
                            err("gateway " + gw.name + " has no pool '" + pool + "'", ge->pos);
                            continue;
                        }
                        act.pool = pool;
                        if (ge->binding->holdup) {
                            act.holdup = *ge->binding->holdup;
                        } else if (ingress_can_id && gw.holdup_policy != HoldupPolicy::None) {
                            act.holdup = compute_holdup(*ingress_can_id, m.period, gw.holdup_policy);
                        } else {
                            if (warned_holdup_.insert({mi, g}).second) {
                                diags_.warning("message " + m.name + ": no hold-up time at " + gw.name +
                                                   "; using 0",
                                               ge->pos);
                            }
                            act.holdup = SimTime::zero();
                        }
                        if (act.holdup < SimTime::zero()) {
                            err("hold-up time must not be negative", ge->pos);
                        }
                    }
                }
                add_rule(std::move(rule), mi, m.pos);
            }

            // Final delivery.
            const auto& last = legs.back();
            if (!last.eth) {
                cfg_.derived.filters.push_back(CanFilterSpec{cfg_.buses[last.hops.front().medium].name, rname,
                                                             static_cast<std::uint16_t>(lb.back().binding->id)});
            }
        }

        for (const auto& e : m.mapping) {
            auto d = dev_.find(e.target);
            if (d != dev_.end() && cfg_.devices[d->second].kind == DeviceKind::Gateway &&
                !gateways_on_path.count(d->second) && diags_.error_count() == errors_before) {
                err("gateway " + e.target + " is listed but not on the shortest path", e.pos);
            }
        }
    }

    GroupInfo& group(const std::string& name, const ClassTag& tag, SourcePos pos)
    {
        auto it = groups_.find(name);
        if (it == groups_.end()) {
            group_order_.push_back(name);
            it = groups_.emplace(name, GroupInfo{name, tag, 0, {}, {}, {}, false, pos}).first;
        }
        return it->second;
    }

    void note_can_id(const std::string& bus, std::uint16_t id, std::uint32_t mi, SourcePos pos)
    {
        auto [it, inserted] = can_ids_.emplace(std::pair{bus, id}, mi);
        if (!inserted && it->second != mi) {
            diags_.error("duplicate CAN id " + std::to_string(id) + " on bus " + bus + " (messages " +
                             cfg_.messages[it->second].name + " and " + cfg_.messages[mi].name + ")",
                         pos);
        }
    }

    void add_source(SourceSpec s)
    {
        for (const auto& o : cfg_.derived.sources) {
            if (o.message == s.message && o.can == s.can && o.bus == s.bus && o.can_id == s.can_id &&
                o.tag == s.tag && o.device == s.device) {
                if (s.can) {
                    return;
                }
            }
        }
        cfg_.derived.sources.push_back(std::move(s));
    }

    void add_rule(RuleSpec r, std::uint32_t mi, SourcePos pos)
    {
        auto key = std::tuple{r.gateway, r.ingress, r.key};
        auto [it, inserted] = rule_owner_.emplace(key, mi);
        if (!inserted && it->second != mi) {
            diags_.error("ambiguous route at " + r.gateway + " for " + r.key + " from " + r.ingress + " (messages " +
                             cfg_.messages[it->second].name + " and " + cfg_.messages[mi].name + ")",
                         pos);
            return;
        }
        cfg_.derived.rules.push_back(std::move(r));
    }

    void check_groups()
    {
        for (const auto& name : group_order_) {
            const auto& g = groups_.at(name);
            for (std::uint32_t mi : g.messages) {
                const auto& u = usage_.at({name, mi});
                if (u.sources != g.sources || u.exits != g.exits) {
                    diags_.error("messages sharing " + name + " must have the same entry and exit devices", g.pos);
                    break;
                }
            }
            if (g.tag.cls == TrafficClass::TT && g.sources.size() != 1) {
                diags_.error("TT " + name + " must have a single sending device", g.pos);
            }
        }
        for (const auto& [id, classes] : stream_class_) {
            if (classes.size() > 1) {
                diags_.error("AVB stream " + std::to_string(id) + " is bound to both class A and class B");
            }
        }
        for (const auto& [id, bags] : vl_bag_) {
            if (bags.size() > 1) {
                diags_.error("RC virtual link " + std::to_string(id) + " is bound with different bags");
            }
        }
    }

    // -----------------------------------------------------------------------
    // Addressing and forwarding

    void build_addresses()
    {
        auto& addrs = cfg_.derived.addresses;
        for (std::uint32_t i = 0; i < cfg_.devices.size(); ++i) {
            addrs.push_back(AddressSpec{cfg_.devices[i].name, i, {}});
        }
        for (const auto& name : group_order_) {
            auto& g = groups_.at(name);
            g.address = static_cast<std::uint32_t>(addrs.size());
            AddressSpec a{name, kNoDevice, {}};
            for (std::uint32_t e : g.exits) {
                a.exits.push_back(cfg_.devices[e].name);
            }
            std::sort(a.exits.begin(), a.exits.end());
            addrs.push_back(std::move(a));
        }
        for (const auto& [index, gname, unicast] : pending_dst_) {
            cfg_.derived.sources[index].dst = gname.empty() ? unicast : groups_.at(gname).address;
        }
        for (const auto& [index, gname, unicast] : pending_rule_dst_) {
            cfg_.derived.rules[index].action.dst = gname.empty() ? unicast : groups_.at(gname).address;
        }
        // Identical sources collapse once their destinations are known.
        auto& src = cfg_.derived.sources;
        std::vector<SourceSpec> unique;
        for (auto& s : src) {
            const bool dup = std::any_of(unique.begin(), unique.end(), [&](const SourceSpec& o) {
                return o.message == s.message && o.can == s.can && o.bus == s.bus && o.can_id == s.can_id &&
                       o.tag == s.tag && o.dst == s.dst && o.device == s.device;
            });
            if (!dup) {
                unique.push_back(std::move(s));
            }
        }
        src = std::move(unique);
        auto& rules = cfg_.derived.rules;
        std::vector<RuleSpec> unique_rules;
        for (auto& r : rules) {
            const bool dup = std::any_of(unique_rules.begin(), unique_rules.end(), [&](const RuleSpec& o) {
                return o.gateway == r.gateway && o.ingress == r.ingress && o.key == r.key && o.action == r.action;
            });
            if (!dup) {
                unique_rules.push_back(std::move(r));
            }
        }
        rules = std::move(unique_rules);
        auto& filters = cfg_.derived.filters;
        std::vector<CanFilterSpec> unique_filters;
        for (auto& f : filters) {
            const bool dup = std::any_of(unique_filters.begin(), unique_filters.end(), [&](const CanFilterSpec& o) {
                return o.bus == f.bus && o.device == f.device && o.can_id == f.can_id;
            });
            if (!dup) {
                unique_filters.push_back(f);
            }
        }
        filters = std::move(unique_filters);
    }

    void build_ports()
    {
        for (std::uint32_t i = 0; i < cfg_.links.size(); ++i) {
            const auto& l = cfg_.links[i];
            for (const auto& [a, b] : {std::pair{l.a, l.b}, std::pair{l.b, l.a}}) {
                const auto& dev = cfg_.devices[dev_.at(a)];
                PortSpec p;
                p.device = a;
                p.peer = b;
                p.link = l.name;
                p.rate = l.rate;
                p.queue_capacity = dev.queue_capacity.value_or(cfg_.sim.queue_capacity);
                port_index_[{dev_.at(a), dev_.at(b)}] = cfg_.derived.ports.size();
                cfg_.derived.ports.push_back(std::move(p));
            }
        }
    }

    /// BFS over Ethernet from `root`, passing only through switches; returns
    /// the parent of every reached device (kNone for the root or unreached).
    std::vector<std::uint32_t> eth_tree(std::uint32_t root) const
    {
        std::vector<std::uint32_t> parent(cfg_.devices.size(), kNone);
        std::vector<bool> seen(cfg_.devices.size(), false);
        std::deque<std::uint32_t> q{root};
        seen[root] = true;
        while (!q.empty()) {
            const std::uint32_t d = q.front();
            q.pop_front();
            if (d != root && cfg_.devices[d].kind != DeviceKind::Switch) {
                continue;
            }
            for (const auto& a : eth_adj_[d]) {
                if (!seen[a.peer]) {
                    seen[a.peer] = true;
                    parent[a.peer] = d;
                    q.push_back(a.peer);
                }
            }
        }
        return parent;
    }

    void build_forwarding()
    {
        std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::set<std::uint32_t>> entries;
        for (std::uint32_t dst : unicast_) {
            const auto parent = eth_tree(dst);
            for (std::uint32_t d = 0; d < cfg_.devices.size(); ++d) {
                if (parent[d] != kNone) {
                    entries[{d, dst, kNoDevice}].insert(parent[d]);
                }
            }
        }
        for (const auto& name : group_order_) {
            auto& g = groups_.at(name);
            for (std::uint32_t src : g.sources) {
                const auto parent = eth_tree(src);
                auto& edges = tree_edges_[{name, src}];
                for (std::uint32_t e : g.exits) {
                    if (parent[e] == kNone) {
                        diags_.error(name + ": " + cfg_.devices[e].name + " is not reachable over Ethernet from " +
                                     cfg_.devices[src].name);
                        continue;
                    }
                    for (std::uint32_t c = e; c != src; c = parent[c]) {
                        entries[{parent[c], g.address, src}].insert(c);
                        edges.insert({parent[c], c});
                    }
                }
            }
        }
        for (const auto& [key, peers] : entries) {
            const auto& [dev, addr, src] = key;
            ForwardEntry f;
            f.device = cfg_.devices[dev].name;
            f.address = addr;
            f.src = src;
            for (std::uint32_t p : peers) {
                f.peers.push_back(cfg_.devices[p].name);
            }
            // Keep link declaration order for the egress list.
            std::sort(f.peers.begin(), f.peers.end(), [&](const std::string& x, const std::string& y) {
                return port_index_.at({dev, dev_.at(x)}) < port_index_.at({dev, dev_.at(y)});
            });
            cfg_.derived.forwarding.push_back(std::move(f));
        }
    }

    // -----------------------------------------------------------------------
    // Reservations and schedule

    int frame_payload(std::uint32_t mi, bool from_gateway) const
    {
        return from_gateway ? kEthMinPayload : std::max(cfg_.messages[mi].payload, kEthMinPayload);
    }

    void reserve_avb()
    {
        for (const auto& name : group_order_) {
            const auto& g = groups_.at(name);
            if (g.tag.cls != TrafficClass::AVB_A && g.tag.cls != TrafficClass::AVB_B) {
                continue;
            }
            std::int64_t slope = 0;
            for (std::uint32_t mi : g.messages) {
                const auto& m = cfg_.messages[mi];
                const bool native = g.sources.count(dev_.at(m.sender)) != 0;
                const __int128 bits = eth_wire_bits(frame_payload(mi, !native));
                const __int128 p = m.period.ticks();
                slope += static_cast<std::int64_t>((bits * kTicksPerSecond + p - 1) / p);
            }
            for (std::uint32_t src : g.sources) {
                for (const auto& [a, b] : tree_edges_[{name, src}]) {
                    auto& port = cfg_.derived.ports[port_index_.at({a, b})];
                    (g.tag.cls == TrafficClass::AVB_A ? port.idle_slope_a : port.idle_slope_b) += slope;
                }
            }
        }
        for (const auto& p : cfg_.derived.ports) {
            if (static_cast<__int128>(p.idle_slope_a + p.idle_slope_b) * 4 > static_cast<__int128>(p.rate) * 3) {
                diags_.error("AVB reservation on " + port_key(p.device, p.peer) + " is " +
                             format_rate(p.idle_slope_a + p.idle_slope_b) + ", above 75% of " + format_rate(p.rate));
            }
        }
    }

    void schedule_tt()
    {
        std::vector<TtFlow> flows;
        for (const auto& name : group_order_) {
            const auto& g = groups_.at(name);
            if (g.tag.cls != TrafficClass::TT) {
                continue;
            }
            const std::uint32_t src = *g.sources.begin();
            const bool native = cfg_.devices[src].kind != DeviceKind::Gateway ||
                                std::all_of(g.messages.begin(), g.messages.end(),
                                            [&](std::uint32_t mi) { return cfg_.messages[mi].sender ==
                                                                           cfg_.devices[src].name; });
            SimTime period = SimTime::max();
            int payload = kEthMinPayload;
            for (std::uint32_t mi : g.messages) {
                const auto& m = cfg_.messages[mi];
                if (native && period != SimTime::max() && m.period != period) {
                    diags_.error("messages sharing " + name + " must have equal periods", m.pos);
                }
                period = std::min(period, m.period);
                payload = std::max(payload, native ? frame_payload(mi, false) : kEthMaxPayload);
            }
            // Breadth-first over the tree from the source, accumulating the
            // transmission and switching delay to each link.
            const auto& edges = tree_edges_[{name, src}];
            std::map<std::uint32_t, SimTime> reach{{src, SimTime::zero()}};
            std::deque<std::uint32_t> q{src};
            TtFlow f;
            f.ct_id = g.tag.id;
            f.period = period;
            f.duration = SimTime::zero();
            while (!q.empty()) {
                const std::uint32_t d = q.front();
                q.pop_front();
                for (const auto& a : eth_adj_[d]) {
                    if (!edges.count({d, a.peer})) {
                        continue;
                    }
                    const auto& link = cfg_.links[a.link];
                    const SimTime dur = eth_frame_duration(payload, link.rate);
                    f.duration = std::max(f.duration, dur);
                    f.hops.push_back(TtHop{port_key(cfg_.devices[d].name, cfg_.devices[a.peer].name), reach[d]});
                    const auto& peer = cfg_.devices[a.peer];
                    reach[a.peer] = reach[d] + dur +
                                    (peer.kind == DeviceKind::Switch ? peer.hardware_delay : SimTime::zero());
                    q.push_back(a.peer);
                }
            }
            tt_native_[g.tag.id] = native;
            flows.push_back(std::move(f));
        }
        if (flows.empty()) {
            return;
        }
        try {
            cfg_.derived.schedule = generate_tdma_schedule(flows, cfg_.sim.cycle_cap);
        } catch (const ScheduleInfeasible& e) {
            diags_.error(std::string("TT schedule: ") + e.what());
        } catch (const InvalidArgument& e) {
            diags_.error(std::string("TT schedule: ") + e.what());
        }
    }

    void finish_sources()
    {
        if (diags_.has_errors()) {
            return;
        }
        for (auto& s : cfg_.derived.sources) {
            if (s.can || s.tag.cls != TrafficClass::TT) {
                continue;
            }
            // A native TT source releases at the start of its first window.
            const auto& addr = cfg_.derived.addresses[s.dst];
            const std::uint32_t src = dev_.at(s.device);
            const auto& edges = tree_edges_[{addr.name, src}];
            for (const auto& a : eth_adj_[src]) {
                if (edges.count({src, a.peer})) {
                    s.offset = first_window_offset(cfg_.derived.schedule, s.tag.id,
                                                   port_key(s.device, cfg_.devices[a.peer].name));
                    break;
                }
            }
        }
    }

    NetworkConfig& cfg_;
    Diagnostics& diags_;

    std::map<std::string, std::uint32_t> dev_;
    std::map<std::string, std::uint32_t> link_;
    std::map<std::string, std::uint32_t> bus_;
    std::set<std::string> segments_;
    std::vector<std::vector<EthAdj>> eth_adj_;
    std::vector<std::vector<std::uint32_t>> dev_buses_;

    std::set<const MappingEntry*> used_targets_;
    std::map<std::string, GroupInfo> groups_;
    std::vector<std::string> group_order_;
    std::map<std::pair<std::string, std::uint32_t>, Usage> usage_;
    std::map<std::int32_t, std::set<bool>> stream_class_;
    std::map<std::int32_t, std::set<std::int64_t>> vl_bag_;
    std::set<std::uint32_t> unicast_;
    std::map<std::pair<std::string, std::uint16_t>, std::uint32_t> can_ids_;
    std::map<std::tuple<std::string, std::string, std::string>, std::uint32_t> rule_owner_;
    std::set<std::pair<std::uint32_t, std::uint32_t>> warned_holdup_;
    std::vector<std::tuple<std::size_t, std::string, std::uint32_t>> pending_dst_;
    std::vector<std::tuple<std::size_t, std::string, std::uint32_t>> pending_rule_dst_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> port_index_;
    std::map<std::pair<std::string, std::uint32_t>, std::set<std::pair<std::uint32_t, std::uint32_t>>> tree_edges_;
    std::map<std::int32_t, bool> tt_native_;
};

} // namespace

void derive(NetworkConfig& cfg, Diagnostics& diags)
{
    Deriver(cfg, diags).run();
}

} // namespace ivnsim
