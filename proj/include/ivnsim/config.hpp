#pragma once

#include "ivnsim/can.hpp"
#include "ivnsim/clock.hpp"
#include "ivnsim/diagnostics.hpp"
#include "ivnsim/ethernet.hpp"
#include "ivnsim/gateway.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ivnsim {

enum class DeviceKind { Node, Switch, Gateway };

std::string_view to_string(DeviceKind k) noexcept;

inline constexpr SimTime kDefaultHardwareDelay = SimTime::us(8);
inline constexpr SimTime kDefaultProcessingDelay = SimTime::us(40);

struct DeviceSpec {
    std::string name;
    DeviceKind kind = DeviceKind::Node;
    Ppm drift{};
    SimTime hardware_delay = kDefaultHardwareDelay;     // switches
    SimTime processing_delay = kDefaultProcessingDelay; // gateways
    SimTime processing_jitter{};                        // gateways, uniform extra delay
    HoldupPolicy holdup_policy = HoldupPolicy::None;    // gateways
    std::optional<CanTxBufferMode> can_tx_buffer;      // gateways; falls back to the sim setting
    std::optional<int> queue_capacity;
    std::vector<std::string> pools;
    SourcePos pos{};
};

struct EthLinkSpec {
    std::string name;
    std::string segment;
    std::string a;
    std::string b;
    std::int64_t rate = kEthDefaultRate;
    SourcePos pos{};
};

struct CanBusSpec {
    std::string name;
    std::string segment;
    std::int64_t bitrate = kCanDefaultBitrate;
    bool stuffing = false;
    std::vector<std::string> attached;
    SourcePos pos{};
};

enum class BindingKind { Can, Tt, Avb, Rc, Be, Pool };

struct Binding {
    BindingKind kind = BindingKind::Can;
    std::int32_t id = 0;   // can id, ct id, stream id or vl id
    bool class_b = false;  // avb
    SimTime bag{};         // rc
    std::int32_t priority = 0;
    std::string pool;      // pool binding
    std::optional<SimTime> holdup;

    friend bool operator==(const Binding&, const Binding&) = default;
};

struct MappingEntry {
    std::string target;             // segment, link, bus or gateway
    std::optional<Binding> binding; // none: bare gateway entry
    SourcePos pos{};
};

struct MessageSpec {
    std::string name;
    std::string sender;
    std::vector<std::string> receivers;
    int payload = 0;
    SimTime period{};
    SimTime offset{};
    SimTime release_jitter{};
    bool multicast = false;
    std::vector<MappingEntry> mapping;
    SourcePos pos{};
};

struct SimSettings {
    int queue_capacity = 512;
    SimTime tt_tolerance = SimTime::us(1);
    std::vector<TrafficClass> precedence{TrafficClass::RC, TrafficClass::AVB_A, TrafficClass::AVB_B, TrafficClass::BE};
    CanTxBufferMode can_tx_buffer = CanTxBufferMode::Fifo;
    SimTime drain_cap = SimTime::s(10);
    SimTime cycle_cap = SimTime::s(10);
};

struct MetricSettings {
    bool latency = true;
    bool queue_length = true;
    bool credit = true;
    bool departures = true;
    bool tx_bits = true;
    bool stations = false; // latency-so-far at switches and gateways
};

// ---------------------------------------------------------------------------
// Derived part, recomputed by derive()

inline constexpr std::uint32_t kNoDevice = 0xFFFFFFFF;

/// Ethernet address: device i has unicast address i; groups follow.
struct AddressSpec {
    std::string name;
    std::uint32_t device = kNoDevice; // unicast target
    std::vector<std::string> exits;   // group members that consume the frame
};

struct PortSpec {
    std::string device;
    std::string peer;
    std::string link;
    std::int64_t rate = kEthDefaultRate;
    int queue_capacity = 512;
    std::int64_t idle_slope_a = 0;
    std::int64_t idle_slope_b = 0;
};

struct ForwardEntry {
    std::string device;
    std::uint32_t address = 0;
    std::uint32_t src = kNoDevice; // set for group addresses
    std::vector<std::string> peers;
};

struct RuleSpec {
    std::string gateway;
    std::string ingress;
    std::string key;
    RouteAction action;
};

struct CanFilterSpec {
    std::string bus;
    std::string device;
    std::uint16_t can_id = 0;
};

/// One periodic emission of a message at its sender.
struct SourceSpec {
    std::uint32_t message = 0;
    std::string device;
    SimTime period{};
    SimTime offset{};
    SimTime release_jitter{};
    bool can = false;
    // CAN
    std::string bus;
    std::uint16_t can_id = 0;
    // Ethernet
    ClassTag tag{};
    std::uint32_t dst = 0;
    int payload = kEthMinPayload;
};

struct DerivedConfig {
    std::vector<AddressSpec> addresses;
    std::vector<PortSpec> ports;
    std::vector<ForwardEntry> forwarding;
    std::vector<RuleSpec> rules;
    std::vector<CanFilterSpec> filters;
    std::vector<SourceSpec> sources;
    TdmaSchedule schedule;
};

/// A compiled scenario. The declarative part is what ANDL and overrides
/// describe; derive() recomputes the derived part from it.
struct NetworkConfig {
    std::string network;
    std::vector<DeviceSpec> devices;
    std::vector<EthLinkSpec> links;
    std::vector<CanBusSpec> buses;
    std::vector<MessageSpec> messages;
    SimSettings sim;
    MetricSettings metrics;
    std::string inline_ini;
    std::vector<std::pair<std::string, std::string>> applied_overrides;

    DerivedConfig derived;

    [[nodiscard]] const DeviceSpec* find_device(std::string_view name) const;
    [[nodiscard]] std::optional<std::uint32_t> device_index(std::string_view name) const;
    [[nodiscard]] const EthLinkSpec* find_link(std::string_view name) const;
    [[nodiscard]] const CanBusSpec* find_bus(std::string_view name) const;
    [[nodiscard]] std::optional<std::uint32_t> message_index(std::string_view name) const;
};

/// Applies one device parameter ("drift", "hardwareDelay", "holdUpPolicy", ...).
/// Unknown names are warnings; malformed values are errors.
void apply_device_param(DeviceSpec& d, std::string_view name, std::string_view value, Diagnostics& diags,
                        SourcePos pos = {});

void apply_link_param(EthLinkSpec& l, std::string_view name, std::string_view value, Diagnostics& diags,
                      SourcePos pos = {});
void apply_bus_param(CanBusSpec& b, std::string_view name, std::string_view value, Diagnostics& diags,
                     SourcePos pos = {});

/// Applies a dotted override key: "<device>.<param>", "<link>.bandwidth",
/// "<bus>.bandwidth", "<bus>.stuffing", "<message>.period", "sim.<setting>",
/// "metrics.<flag>". Unknown keys are warnings.
void apply_override(NetworkConfig& cfg, std::string_view key, std::string_view value, Diagnostics& diags,
                    SourcePos pos = {});

/// Parses "key = value" lines (# and ; comments, [sections] ignored) and
/// applies each as an override.
void apply_ini(NetworkConfig& cfg, std::string_view text, Diagnostics& diags, SourcePos origin = {});

/// Validates the declarative part and recomputes `cfg.derived`: paths,
/// gateway routes, addressing and forwarding, AVB reservations and the TDMA
/// schedule. Problems are reported as diagnostics; the derived part is only
/// meaningful when no error was reported.
void derive(NetworkConfig& cfg, Diagnostics& diags);

/// derive() that throws InternalConsistency on any error.
void derive_or_throw(NetworkConfig& cfg);

/// Stable JSON document (sorted keys) with the declarative and derived parts.
std::string to_json(const NetworkConfig& cfg);
/// Reads the declarative part and re-derives. Throws ConfigError.
NetworkConfig config_from_json(std::string_view text, Diagnostics& diags);

} // namespace ivnsim
