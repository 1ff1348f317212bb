#pragma once

#include "ivnsim/time.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ivnsim {

using ModuleId = std::uint32_t;

enum class EventKind : std::uint8_t {
    Timer,
    Release,
    TxComplete,
    Arrival,
    Wake,
    Flush,
    Arbitrate,
    Deliver,
};

std::string_view to_string(EventKind k) noexcept;

/// Opaque reference to a scheduled event; used for cancellation.
class EventHandle {
public:
    EventHandle() = default;
    [[nodiscard]] bool valid() const noexcept { return seq_ != 0; }
    [[nodiscard]] std::uint64_t seq() const noexcept { return seq_; }

private:
    friend class Kernel;
    explicit EventHandle(std::uint64_t s) : seq_(s) {}
    std::uint64_t seq_ = 0;
};

struct RunSummary {
    std::uint64_t events_dispatched = 0;
    SimTime final_time{};
    SimTime last_event_time{};
};

struct TraceEntry {
    SimTime time;
    std::uint64_t seq;
    ModuleId target;
    EventKind kind;
};

/// Future event list with a strict (time, seq) total order.
///
/// Events at equal time dispatch in insertion order. run_until() is
/// inclusive: events stamped exactly at the horizon are dispatched.
class Kernel {
public:
    using Action = std::function<void()>;

    explicit Kernel(std::uint64_t seed = 0);

    Kernel(const Kernel&) = delete;
    Kernel& operator=(const Kernel&) = delete;

    /// Interns a module path; the same path always yields the same id.
    ModuleId register_module(std::string_view path);
    [[nodiscard]] const std::string& module_path(ModuleId id) const { return modules_.at(id); }

    /// Throws SchedulingInPast if time < now().
    EventHandle schedule(SimTime time, ModuleId target, EventKind kind, Action action);
    EventHandle schedule_in(SimTime delay, ModuleId target, EventKind kind, Action action)
    {
        return schedule(now_ + delay, target, kind, std::move(action));
    }
    /// Returns false if the event already ran or was cancelled.
    bool cancel(EventHandle h);

    /// Dispatches every event with time <= t_end; afterwards now() == t_end.
    RunSummary run_until(SimTime t_end);
    /// Stops the current run_until() after the event being dispatched.
    void stop() noexcept { stop_requested_ = true; }

    [[nodiscard]] SimTime now() const noexcept { return now_; }
    [[nodiscard]] std::size_t pending() const noexcept { return live_; }
    [[nodiscard]] std::uint64_t dispatched() const noexcept { return dispatched_; }

    std::mt19937_64& rng() noexcept { return rng_; }

    void enable_trace(bool on) { trace_enabled_ = on; }
    [[nodiscard]] const std::vector<TraceEntry>& trace() const noexcept { return trace_; }
    /// FNV-1a over the trace (time, seq, module path, kind).
    [[nodiscard]] std::uint64_t trace_hash() const;

private:
    struct Entry {
        SimTime time;
        std::uint64_t seq;
        ModuleId target;
        EventKind kind;
        Action action;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const noexcept
        {
            if (a.time != b.time) {
                return a.time > b.time;
            }
            return a.seq > b.seq;
        }
    };

    std::vector<Entry> heap_;
    std::unordered_set<std::uint64_t> cancelled_;
    std::unordered_set<std::uint64_t> live_seqs_;
    std::vector<std::string> modules_;
    std::unordered_map<std::string, ModuleId> module_index_;
    SimTime now_{};
    std::uint64_t next_seq_ = 1;
    std::size_t live_ = 0;
    std::uint64_t dispatched_ = 0;
    bool stop_requested_ = false;
    bool trace_enabled_ = false;
    std::vector<TraceEntry> trace_;
    std::mt19937_64 rng_;
};

} // namespace ivnsim
