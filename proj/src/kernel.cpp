#include "ivnsim/kernel.hpp"

#include "ivnsim/error.hpp"

#include <algorithm>

namespace ivnsim {

std::string_view to_string(EventKind k) noexcept
{
    switch (k) {
    case EventKind::Timer: return "timer";
    case EventKind::Release: return "release";
    case EventKind::TxComplete: return "tx-complete";
    case EventKind::Arrival: return "arrival";
    case EventKind::Wake: return "wake";
    case EventKind::Flush: return "flush";
    case EventKind::Arbitrate: return "arbitrate";
    case EventKind::Deliver: return "deliver";
    }
    return "?";
}

Kernel::Kernel(std::uint64_t seed) : rng_(seed)
{
    register_module("kernel");
}

ModuleId Kernel::register_module(std::string_view path)
{
    std::string key(path);
    if (auto it = module_index_.find(key); it != module_index_.end()) {
        return it->second;
    }
    const auto id = static_cast<ModuleId>(modules_.size());
    modules_.push_back(key);
    module_index_.emplace(std::move(key), id);
    return id;
}

EventHandle Kernel::schedule(SimTime time, ModuleId target, EventKind kind, Action action)
{
    if (time < now_) {
        throw SchedulingInPast("event at " + format_time(time) + " scheduled at " + format_time(now_));
    }
    const std::uint64_t seq = next_seq_++;
    heap_.push_back(Entry{time, seq, target, kind, std::move(action)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    live_seqs_.insert(seq);
    ++live_;
    return EventHandle{seq};
}

bool Kernel::cancel(EventHandle h)
{
    if (!h.valid()) {
        return false;
    }
    if (live_seqs_.erase(h.seq_) == 0) {
        return false;
    }
    cancelled_.insert(h.seq_);
    --live_;
    return true;
}

RunSummary Kernel::run_until(SimTime t_end)
{
    if (t_end < now_) {
        throw InvalidArgument("run_until horizon precedes current time");
    }
    RunSummary summary;
    summary.last_event_time = now_;
    stop_requested_ = false;
    while (!heap_.empty() && heap_.front().time <= t_end) {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        Entry ev = std::move(heap_.back());
        heap_.pop_back();
        if (auto it = cancelled_.find(ev.seq); it != cancelled_.end()) {
            cancelled_.erase(it);
            continue;
        }
        live_seqs_.erase(ev.seq);
        --live_;
        now_ = ev.time;
        if (trace_enabled_) {
            trace_.push_back(TraceEntry{ev.time, ev.seq, ev.target, ev.kind});
        }
        ev.action();
        ++summary.events_dispatched;
        ++dispatched_;
        summary.last_event_time = now_;
        if (stop_requested_) {
            summary.final_time = now_;
            return summary;
        }
    }
    now_ = t_end;
    summary.final_time = t_end;
    return summary;
}

std::uint64_t Kernel::trace_hash() const
{
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& t : trace_) {
        const std::int64_t ticks = t.time.ticks();
        mix(&ticks, sizeof ticks);
        mix(&t.seq, sizeof t.seq);
        const auto& path = modules_[t.target];
        mix(path.data(), path.size());
        const auto k = static_cast<std::uint8_t>(t.kind);
        mix(&k, 1);
    }
    return h;
}

} // namespace ivnsim
