#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace ivnsim {

inline constexpr std::int64_t kTicksPerSecond = 1'000'000'000'000; // 1 tick = 1 ps

/// Simulation time as a signed count of picoseconds.
///
/// Addition, subtraction and scaling are overflow-checked and throw
/// TimeOverflow instead of wrapping.
class SimTime {
public:
    constexpr SimTime() noexcept = default;

    static constexpr SimTime from_ticks(std::int64_t t) noexcept { return SimTime{t}; }
    static constexpr SimTime ps(std::int64_t v) noexcept { return SimTime{v}; }
    static constexpr SimTime ns(std::int64_t v) noexcept { return SimTime{v * 1'000}; }
    static constexpr SimTime us(std::int64_t v) noexcept { return SimTime{v * 1'000'000}; }
    static constexpr SimTime ms(std::int64_t v) noexcept { return SimTime{v * 1'000'000'000}; }
    static constexpr SimTime s(std::int64_t v) noexcept { return SimTime{v * kTicksPerSecond}; }
    static constexpr SimTime zero() noexcept { return SimTime{0}; }
    static constexpr SimTime max() noexcept
    {
        return SimTime{std::numeric_limits<std::int64_t>::max()};
    }

    [[nodiscard]] constexpr std::int64_t ticks() const noexcept { return ticks_; }
    [[nodiscard]] constexpr double seconds() const noexcept
    {
        return static_cast<double>(ticks_) / static_cast<double>(kTicksPerSecond);
    }

    friend constexpr auto operator<=>(SimTime, SimTime) noexcept = default;

    friend SimTime operator+(SimTime a, SimTime b);
    friend SimTime operator-(SimTime a, SimTime b);
    friend SimTime operator*(SimTime a, std::int64_t k);
    friend SimTime operator*(std::int64_t k, SimTime a) { return a * k; }
    SimTime& operator+=(SimTime o) { return *this = *this + o; }
    SimTime& operator-=(SimTime o) { return *this = *this - o; }

private:
    explicit constexpr SimTime(std::int64_t t) noexcept : ticks_(t) {}
    std::int64_t ticks_ = 0;
};

/// ceil(bits * 1e12 / rate_bps) ticks.
SimTime transmission_time(std::int64_t bits, std::int64_t rate_bps);

/// Parses "125us", "2ms", "1.5s", "10ns", "500ps". A bare number is
/// rejected. Values that are not a whole number of picoseconds are rejected.
std::optional<SimTime> parse_time(std::string_view text);

/// Parses "100Mb/s", "500kb/s", "1Gb/s", "9600b/s" (also "bps"/"kbps"/"Mbps"/"Gbps").
std::optional<std::int64_t> parse_rate(std::string_view text);

/// Parses "6B", "500B", "1kB" (1000 bytes) or a bare integer.
std::optional<std::int64_t> parse_bytes(std::string_view text);

/// Shortest exact rendering with the largest unit that divides the value:
/// 2ms, 125us, 6720ns, 3ps.
std::string format_time(SimTime t);
std::string format_rate(std::int64_t bps);

/// Interval of the form "t0:t1" using the time syntax above.
std::optional<std::pair<SimTime, SimTime>> parse_window(std::string_view text);

} // namespace ivnsim
