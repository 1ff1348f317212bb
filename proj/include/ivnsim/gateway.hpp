#pragma once

#include "ivnsim/ethernet.hpp"
#include "ivnsim/frames.hpp"
#include "ivnsim/kernel.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivnsim {

// ---------------------------------------------------------------------------
// Aggregate payload: [count u16 BE] then records [id u16 BE][dlc u8][dlc bytes],
// zero-padded to the Ethernet minimum payload.

struct CanRecord {
    std::uint16_t id = 0;
    std::uint8_t dlc = 0;
    std::array<std::uint8_t, kCanMaxPayload> data{};

    friend bool operator==(const CanRecord&, const CanRecord&) = default;
};

inline constexpr int kAggregateHeaderBytes = 2;
inline constexpr int kRecordHeaderBytes = 3;

[[nodiscard]] inline int record_size(const CanRecord& r) { return kRecordHeaderBytes + r.dlc; }

/// Unpadded size of one aggregate holding `records`.
int aggregate_size(std::span<const CanRecord> records);

/// Encodes the records into as few payloads as possible, each at most 1500
/// bytes and padded to at least 46, preserving order. Empty input yields no
/// payloads.
std::vector<std::vector<std::uint8_t>> encode_aggregate(std::span<const CanRecord> records);

/// Throws MalformedAggregate on a truncated record, dlc > 8, id > 0x7FF, a
/// payload longer than the minimum that is not tiled exactly, or non-zero
/// padding.
std::vector<CanRecord> decode_aggregate(std::span<const std::uint8_t> payload);

// ---------------------------------------------------------------------------
// Hold-up times

enum class HoldupPolicy { None, Config1, Config2 };

std::string_view to_string(HoldupPolicy p) noexcept;
std::optional<HoldupPolicy> parse_holdup_policy(std::string_view s) noexcept;

/// Config1: id < 101 -> 0, 101..200 -> 25 %, 201..300 -> 50 %, above -> 75 %
/// of the period. Config2 is Config1 with 1 ms for id < 101. None -> 0.
SimTime compute_holdup(int can_id, SimTime period, HoldupPolicy policy);

// ---------------------------------------------------------------------------
// Pools

struct PoolEntry {
    CanFrame frame;
    SimTime arrival{};
    SimTime holdup{};
    std::uint32_t dst = 0;     // Ethernet address of the resulting frame
    ClassTag tag{};            // class binding of the record on the backbone
    std::uint64_t seq = 0;     // insertion order
};

/// Aggregation buffer; the deadline is the minimum of arrival + holdup over
/// the buffered entries.
class Pool {
public:
    explicit Pool(std::string name = {}) : name_(std::move(name)) {}

    /// Returns true if the deadline moved.
    bool insert(PoolEntry e);
    /// Empties the pool and returns the entries in insertion order.
    std::vector<PoolEntry> flush();

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] std::optional<SimTime> deadline() const noexcept { return deadline_; }
    [[nodiscard]] const std::vector<PoolEntry>& buffered() const noexcept { return entries_; }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

private:
    std::string name_;
    std::vector<PoolEntry> entries_;
    std::optional<SimTime> deadline_;
    std::uint64_t seq_ = 0;
};

/// A pool bound to the kernel: keeps one timer at the deadline. When the
/// timer fires, the flush is committed by a second event at the same instant
/// so that arrivals already queued for that tick are included.
class PoolTimer {
public:
    using OnFlush = std::function<void(std::vector<PoolEntry>, SimTime)>;

    PoolTimer(Kernel& kernel, std::string name, OnFlush on_flush);

    PoolTimer(const PoolTimer&) = delete;
    PoolTimer& operator=(const PoolTimer&) = delete;

    /// Inserts at kernel.now(); `e.arrival` is overwritten.
    void insert(PoolEntry e);

    [[nodiscard]] const Pool& pool() const noexcept { return pool_; }
    [[nodiscard]] std::uint64_t flushes() const noexcept { return flushes_; }

private:
    void arm();
    void commit();

    Kernel& kernel_;
    ModuleId module_;
    Pool pool_;
    OnFlush on_flush_;
    EventHandle timer_;
    bool timer_armed_ = false;
    bool commit_pending_ = false;
    std::uint64_t flushes_ = 0;
};

/// Groups flushed entries into Ethernet frames: one group per (class, id,
/// destination) in first-appearance order; BE uses the highest priority in the
/// group, AVB is class A if any record is.
struct AggregateGroup {
    ClassTag tag;
    std::uint32_t dst = 0;
    std::vector<PoolEntry> entries;
};
std::vector<AggregateGroup> group_for_frames(std::vector<PoolEntry> entries);

// ---------------------------------------------------------------------------
// Routing

/// What a gateway does with one matched frame.
struct RouteAction {
    enum class Kind { ToEthernet, ToCan };
    Kind kind = Kind::ToCan;
    // ToCan
    std::string bus;
    std::uint16_t can_id = 0;
    // ToEthernet
    std::string pool; // empty: forwarded directly without aggregation
    SimTime holdup{};
    ClassTag tag{};
    std::uint32_t dst = 0;

    friend bool operator==(const RouteAction&, const RouteAction&) = default;
};

/// Static table keyed by (ingress, key). Ingress is a CAN bus name or
/// "eth:<source device>"; key is "can:<id>" or a class key such as "tt:102".
class RoutingTable {
public:
    /// Adds an action; identical actions for the same key are merged.
    void add(std::string ingress, std::string key, RouteAction action);
    /// Empty span when no rule matches.
    [[nodiscard]] std::span<const RouteAction> route(std::string_view ingress, std::string_view key) const;
    [[nodiscard]] std::size_t size() const noexcept { return rules_.size(); }
    [[nodiscard]] const auto& rules() const noexcept { return rules_; }

private:
    std::map<std::pair<std::string, std::string>, std::vector<RouteAction>, std::less<>> rules_;
};

std::string can_key(std::uint16_t id);
/// "tt:<ct>", "rc:<vl>", "avb:<stream>" or "be:<priority>".
std::string class_key(const ClassTag& tag);

} // namespace ivnsim
