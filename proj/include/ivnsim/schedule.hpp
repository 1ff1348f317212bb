#pragma once

#include "ivnsim/ethernet.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ivnsim {

/// One hop of a time-triggered flow: the directed port and the window start
/// relative to the flow's phase.
struct TtHop {
    std::string link;
    SimTime relative_offset{};
};

struct TtFlow {
    std::int32_t ct_id = 0;
    SimTime period{};
    SimTime duration{};
    std::vector<TtHop> hops;
};

inline constexpr SimTime kDefaultCycleCap = SimTime::s(10);

/// First-fit placement in ascending-period order (ties by ct id). The cycle is
/// the least common multiple of the periods. Each flow gets a single phase;
/// its window on hop h in instance k starts at phase + h.relative_offset +
/// k * period. The phase is shifted past conflicting windows until every
/// instance fits on every hop without wrapping the period.
///
/// Throws CycleTooLong if the cycle exceeds `cycle_cap`, ScheduleInfeasible if
/// a flow cannot be placed (including when a link is over-utilized).
TdmaSchedule generate_tdma_schedule(std::vector<TtFlow> flows, SimTime cycle_cap = kDefaultCycleCap);

/// Offset of the earliest window of `ct_id` on `link`; throws InvalidArgument
/// if there is none.
SimTime first_window_offset(const TdmaSchedule& schedule, std::int32_t ct_id, const std::string& link);

} // namespace ivnsim
