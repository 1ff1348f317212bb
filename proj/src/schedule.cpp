#include "ivnsim/schedule.hpp"

#include "ivnsim/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace ivnsim {

namespace {

using Busy = std::map<std::int64_t, std::int64_t>; // start -> end, disjoint

/// End of a busy interval overlapping [s, e), if any.
std::optional<std::int64_t> overlap(const Busy& busy, std::int64_t s, std::int64_t e)
{
    auto it = busy.lower_bound(e);
    if (it == busy.begin()) {
        return std::nullopt;
    }
    --it;
    if (it->second > s) {
        return it->second;
    }
    return std::nullopt;
}

} // namespace

TdmaSchedule generate_tdma_schedule(std::vector<TtFlow> flows, SimTime cycle_cap)
{
    TdmaSchedule out;
    if (flows.empty()) {
        return out;
    }
    std::set<std::int32_t> seen;
    __int128 cycle = 1;
    for (const auto& f : flows) {
        const std::string ct = "ct " + std::to_string(f.ct_id);
        if (!seen.insert(f.ct_id).second) {
            throw InvalidArgument(ct + " appears twice");
        }
        if (f.period <= SimTime::zero() || f.duration <= SimTime::zero()) {
            throw InvalidArgument(ct + " needs a positive period and duration");
        }
        if (f.hops.empty()) {
            throw InvalidArgument(ct + " has no hops");
        }
        for (const auto& h : f.hops) {
            if (h.relative_offset < SimTime::zero() || h.relative_offset + f.duration > f.period) {
                throw ScheduleInfeasible(ct + " does not fit its period on " + h.link);
            }
        }
        const __int128 p = f.period.ticks();
        cycle = cycle / std::gcd(static_cast<std::int64_t>(cycle), f.period.ticks()) * p;
        if (cycle > cycle_cap.ticks()) {
            throw CycleTooLong("TT cycle exceeds " + format_time(cycle_cap));
        }
    }
    const std::int64_t c = static_cast<std::int64_t>(cycle);
    out.cycle_length = SimTime::from_ticks(c);

    std::map<std::string, __int128> load;
    for (const auto& f : flows) {
        for (const auto& h : f.hops) {
            load[h.link] += static_cast<__int128>(f.duration.ticks()) * (c / f.period.ticks());
        }
    }
    for (const auto& [link, l] : load) {
        if (l > c) {
            throw ScheduleInfeasible("TT utilization of " + link + " exceeds 100 %");
        }
    }

    std::sort(flows.begin(), flows.end(), [](const TtFlow& a, const TtFlow& b) {
        return std::pair{a.period, a.ct_id} < std::pair{b.period, b.ct_id};
    });

    std::map<std::string, Busy> busy;
    for (const auto& f : flows) {
        const std::int64_t period = f.period.ticks();
        const std::int64_t dur = f.duration.ticks();
        const std::int64_t instances = c / period;
        std::int64_t reach = 0;
        for (const auto& h : f.hops) {
            reach = std::max(reach, h.relative_offset.ticks() + dur);
        }
        const std::int64_t bound = period - reach;

        std::int64_t phase = 0;
        bool placed = false;
        while (phase <= bound) {
            std::optional<std::int64_t> shift;
            for (const auto& h : f.hops) {
                const auto& b = busy[h.link];
                for (std::int64_t k = 0; k < instances && !shift; ++k) {
                    const std::int64_t s = phase + h.relative_offset.ticks() + k * period;
                    if (auto end = overlap(b, s, s + dur)) {
                        shift = *end - s;
                    }
                }
                if (shift) {
                    break;
                }
            }
            if (!shift) {
                placed = true;
                break;
            }
            phase += *shift;
        }
        if (!placed) {
            throw ScheduleInfeasible("no free TT window for ct " + std::to_string(f.ct_id));
        }
        for (const auto& h : f.hops) {
            auto& b = busy[h.link];
            for (std::int64_t k = 0; k < instances; ++k) {
                const std::int64_t s = phase + h.relative_offset.ticks() + k * period;
                b.emplace(s, s + dur);
                out.windows.push_back(TdmaWindow{f.ct_id, h.link, SimTime::from_ticks(s), f.duration});
            }
        }
    }
    std::sort(out.windows.begin(), out.windows.end(), [](const TdmaWindow& a, const TdmaWindow& b) {
        return std::tie(a.link, a.offset) < std::tie(b.link, b.offset);
    });
    return out;
}

SimTime first_window_offset(const TdmaSchedule& schedule, std::int32_t ct_id, const std::string& link)
{
    std::optional<SimTime> best;
    for (const auto& w : schedule.windows) {
        if (w.ct_id == ct_id && w.link == link && (!best || w.offset < *best)) {
            best = w.offset;
        }
    }
    if (!best) {
        throw InvalidArgument("no window for ct " + std::to_string(ct_id) + " on " + link);
    }
    return *best;
}

} // namespace ivnsim
