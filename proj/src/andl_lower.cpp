#include "ivnsim/andl.hpp"

#include "ivnsim/error.hpp"

#include <map>
#include <set>

namespace ivnsim::andl {

namespace {

struct Resolved {
    Kind kind = Kind::Node;
    std::vector<Param> params; // base type first
    std::vector<std::string> pools;
};

class Lowering {
public:
    Lowering(const File& file, const CompileOptions& options, Diagnostics& diags)
        : file_(file), options_(options), diags_(diags)
    {
    }

    NetworkConfig run()
    {
        index_types();
        auto blocks = select_network();
        if (blocks.empty()) {
            return std::move(cfg_);
        }
        cfg_.network = blocks.front()->name;
        for (const auto* n : blocks) {
            for (const auto& d : n->devices) {
                declare(d);
            }
        }
        for (const auto* n : blocks) {
            for (const auto& s : n->segments) {
                connect(s);
            }
        }
        finish_topology();
        for (const auto* n : blocks) {
            for (const auto& m : n->messages) {
                message(m);
            }
        }
        std::string ini;
        for (const auto* n : blocks) {
            for (const auto& text : n->inline_ini) {
                ini += text;
                ini += '\n';
            }
        }
        cfg_.inline_ini = ini;
        apply_ini(cfg_, ini, diags_, blocks.front()->pos);
        for (const auto& [k, v] : options_.overrides) {
            apply_override(cfg_, k, v, diags_);
        }
        if (!diags_.has_errors()) {
            derive(cfg_, diags_);
        }
        return std::move(cfg_);
    }

private:
    // -- types ----------------------------------------------------------------

    void index_types()
    {
        for (const auto& tb : file_.types) {
            for (const auto& d : tb.decls) {
                const std::string q = tb.name + "." + d.name;
                if (!types_.emplace(q, &d).second) {
                    diags_.error("duplicate type '" + q + "'", d.pos);
                }
            }
        }
    }

    /// Parameters of `d` with its `extends` chain, base first.
    std::optional<Resolved> resolve(const Decl& d)
    {
        Resolved r;
        r.kind = d.kind;
        std::vector<const Decl*> chain{&d};
        std::set<std::string> seen;
        for (const Decl* cur = &d; !cur->extends.empty();) {
            if (!seen.insert(cur->extends).second) {
                diags_.error("cyclic extends through '" + cur->extends + "'", cur->pos);
                return std::nullopt;
            }
            auto it = types_.find(cur->extends);
            if (it == types_.end()) {
                diags_.error("unknown type '" + cur->extends + "'", cur->pos);
                return std::nullopt;
            }
            if (it->second->kind != d.kind) {
                diags_.error(std::string(to_string(d.kind)) + " " + d.name + " cannot extend " +
                                 std::string(to_string(it->second->kind)) + " " + cur->extends,
                             cur->pos);
                return std::nullopt;
            }
            cur = it->second;
            chain.push_back(cur);
        }
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            r.params.insert(r.params.end(), (*it)->params.begin(), (*it)->params.end());
            for (const auto& p : (*it)->pools) {
                if (std::find(r.pools.begin(), r.pools.end(), p) == r.pools.end()) {
                    r.pools.push_back(p);
                } else if (*it == &d) {
                    diags_.error("duplicate pool '" + p + "' on " + d.name, d.pos);
                }
            }
        }
        return r;
    }

    std::vector<const Network*> select_network()
    {
        std::vector<std::string> names;
        for (const auto& n : file_.networks) {
            if (std::find(names.begin(), names.end(), n.name) == names.end()) {
                names.push_back(n.name);
            }
        }
        std::string wanted = options_.network;
        if (wanted.empty()) {
            if (names.empty()) {
                diags_.error("no network declared");
                return {};
            }
            if (names.size() > 1) {
                std::string list;
                for (const auto& n : names) {
                    list += (list.empty() ? "" : ", ") + n;
                }
                diags_.error("several networks declared (" + list + "); select one");
                return {};
            }
            wanted = names.front();
        }
        std::vector<const Network*> out;
        for (const auto& n : file_.networks) {
            if (n.name == wanted) {
                out.push_back(&n);
            }
        }
        if (out.empty()) {
            diags_.error("no network named '" + wanted + "'");
        }
        return out;
    }

    // -- devices --------------------------------------------------------------

    void declare(const Decl& d)
    {
        if (!names_.insert(d.name).second) {
            diags_.error("duplicate device '" + d.name + "'", d.pos);
            return;
        }
        auto r = resolve(d);
        if (!r) {
            return;
        }
        switch (d.kind) {
        case Kind::EthernetLink:
            if (!r->pools.empty()) {
                diags_.error("pools are only allowed on gateways", d.pos);
            }
            eth_links_[d.name] = {std::move(*r), &d};
            break;
        case Kind::CanLink: {
            if (!r->pools.empty()) {
                diags_.error("pools are only allowed on gateways", d.pos);
            }
            CanBusSpec b;
            b.name = d.name;
            b.pos = d.pos;
            for (const auto& p : r->params) {
                apply_bus_param(b, p.name, p.value, diags_, p.pos);
            }
            bus_index_[d.name] = cfg_.buses.size();
            cfg_.buses.push_back(std::move(b));
            break;
        }
        case Kind::Node:
        case Kind::Gateway:
        case Kind::Switch: {
            DeviceSpec dev;
            dev.name = d.name;
            dev.kind = d.kind == Kind::Node      ? DeviceKind::Node
                       : d.kind == Kind::Gateway ? DeviceKind::Gateway
                                                 : DeviceKind::Switch;
            dev.pos = d.pos;
            dev.pools = r->pools;
            for (const auto& p : r->params) {
                apply_device_param(dev, p.name, p.value, diags_, p.pos);
            }
            device_index_[d.name] = cfg_.devices.size();
            cfg_.devices.push_back(std::move(dev));
            break;
        }
        }
    }

    // -- connections ----------------------------------------------------------

    bool is_device(const std::string& n) const { return device_index_.count(n) != 0; }
    bool is_bus(const std::string& n) const { return bus_index_.count(n) != 0; }
    bool is_eth_link(const std::string& n) const { return eth_links_.count(n) != 0; }

    bool check_endpoint(const std::string& n, SourcePos pos)
    {
        if (is_device(n)) {
            return true;
        }
        if (is_eth_link(n)) {
            diags_.error("ethernetLink " + n + " must sit between two devices", pos);
        } else if (is_bus(n)) {
            diags_.error("canLink " + n + " cannot be used here", pos);
        } else {
            diags_.error("unknown device '" + n + "'", pos);
        }
        return false;
    }

    void add_link(EthLinkSpec l, const std::vector<Param>& params)
    {
        for (const auto& p : params) {
            apply_link_param(l, p.name, p.value, diags_, p.pos);
        }
        cfg_.links.push_back(std::move(l));
    }

    std::string anonymous_name(const std::string& segment)
    {
        for (;;) {
            std::string name = segment + "#" + std::to_string(++anon_counter_[segment]);
            if (!names_.count(name)) {
                return name;
            }
        }
    }

    void connect(const Segment& s)
    {
        for (const auto& c : s.connections) {
            if (c.link) {
                const bool a_ok = check_endpoint(c.a, c.pos);
                const bool b_ok = check_endpoint(c.b, c.pos);
                if (c.link->anonymous) {
                    auto it = types_.find(c.link->name);
                    if (it == types_.end()) {
                        diags_.error("unknown type '" + c.link->name + "'", c.pos);
                        continue;
                    }
                    if (it->second->kind != Kind::EthernetLink) {
                        diags_.error("type " + c.link->name + " is not an ethernetLink", c.pos);
                        continue;
                    }
                    auto r = resolve(*it->second);
                    if (!r || !a_ok || !b_ok) {
                        continue;
                    }
                    add_link(EthLinkSpec{anonymous_name(s.name), s.name, c.a, c.b, kEthDefaultRate, c.pos}, r->params);
                    continue;
                }
                auto it = eth_links_.find(c.link->name);
                if (it == eth_links_.end()) {
                    diags_.error((is_device(c.link->name) || is_bus(c.link->name)
                                      ? "'" + c.link->name + "' is not an ethernetLink"
                                      : "unknown ethernetLink '" + c.link->name + "'"),
                                 c.pos);
                    continue;
                }
                if (!used_links_.insert(c.link->name).second) {
                    diags_.error("ethernetLink " + c.link->name + " is connected twice", c.pos);
                    continue;
                }
                if (a_ok && b_ok) {
                    add_link(EthLinkSpec{c.link->name, s.name, c.a, c.b, kEthDefaultRate, it->second.decl->pos},
                             it->second.resolved.params);
                }
                continue;
            }
            const bool a_bus = is_bus(c.a);
            const bool b_bus = is_bus(c.b);
            if (a_bus && b_bus) {
                diags_.error("cannot connect two CAN buses", c.pos);
                continue;
            }
            if (a_bus || b_bus) {
                const std::string& bus = a_bus ? c.a : c.b;
                const std::string& dev = a_bus ? c.b : c.a;
                if (!check_endpoint(dev, c.pos)) {
                    continue;
                }
                auto& spec = cfg_.buses[bus_index_.at(bus)];
                if (spec.segment.empty()) {
                    spec.segment = s.name;
                } else if (spec.segment != s.name) {
                    diags_.error("canLink " + bus + " appears in segments " + spec.segment + " and " + s.name, c.pos);
                    continue;
                }
                spec.attached.push_back(dev);
                continue;
            }
            const bool a_ok = check_endpoint(c.a, c.pos);
            const bool b_ok = check_endpoint(c.b, c.pos);
            if (a_ok && b_ok) {
                add_link(EthLinkSpec{anonymous_name(s.name), s.name, c.a, c.b, kEthDefaultRate, c.pos}, {});
            }
        }
    }

    void finish_topology()
    {
        for (const auto& [name, link] : eth_links_) {
            if (!used_links_.count(name)) {
                diags_.warning("ethernetLink " + name + " is not connected", link.decl->pos);
            }
        }
        for (auto& b : cfg_.buses) {
            if (b.segment.empty()) {
                diags_.warning("canLink " + b.name + " is not connected", b.pos);
                b.segment = b.name;
            }
        }
    }

    // -- messages -------------------------------------------------------------

    void message(const Message& m)
    {
        MessageSpec spec;
        spec.name = m.name;
        spec.pos = m.pos;
        spec.sender = m.sender;
        spec.receivers = m.receivers;
        auto missing = [&](const char* what) { diags_.error("message " + m.name + ": missing " + what, m.pos); };
        if (m.sender.empty()) {
            missing("sender");
        }
        if (m.receivers.empty()) {
            missing("receivers");
        }
        if (!m.payload) {
            missing("payload");
        } else if (*m.payload < 0 || *m.payload > 65535) {
            diags_.error("message " + m.name + ": payload out of range", m.pos);
        } else {
            spec.payload = static_cast<int>(*m.payload);
        }
        if (!m.period) {
            missing("period");
        } else {
            spec.period = *m.period;
        }
        spec.offset = m.offset.value_or(SimTime::zero());
        spec.release_jitter = m.release_jitter.value_or(SimTime::zero());
        spec.multicast = m.multicast;
        for (const auto& e : m.mapping) {
            spec.mapping.push_back(MappingEntry{e.target, e.binding, e.pos});
        }
        cfg_.messages.push_back(std::move(spec));
    }

    struct LinkTemplate {
        Resolved resolved;
        const Decl* decl = nullptr;
    };

    const File& file_;
    const CompileOptions& options_;
    Diagnostics& diags_;
    NetworkConfig cfg_;

    std::map<std::string, const Decl*> types_;
    std::set<std::string> names_;
    std::map<std::string, LinkTemplate> eth_links_;
    std::set<std::string> used_links_;
    std::map<std::string, std::size_t> bus_index_;
    std::map<std::string, std::size_t> device_index_;
    std::map<std::string, int> anon_counter_;
};

} // namespace

NetworkConfig lower(const File& file, const CompileOptions& options, Diagnostics& diags)
{
    return Lowering(file, options, diags).run();
}

Diagnostics validate(const File& file, const CompileOptions& options)
{
    Diagnostics diags;
    lower(file, options, diags);
    return diags;
}

NetworkConfig compile(const File& file, const CompileOptions& options)
{
    Diagnostics diags;
    auto cfg = lower(file, options, diags);
    if (diags.has_errors()) {
        throw InternalConsistency("compile called on an invalid network:\n" + diags.format("<andl>"));
    }
    return cfg;
}

NetworkConfig compile_text(std::string_view text, const CompileOptions& options, Diagnostics& diags)
{
    auto file = parse(text, diags);
    if (diags.has_errors()) {
        return {};
    }
    return lower(file, options, diags);
}

} // namespace ivnsim::andl
