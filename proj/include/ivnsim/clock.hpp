#pragma once

#include "ivnsim/time.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ivnsim {

/// Rational drift in parts per million: num / den ppm.
struct Ppm {
    std::int64_t num = 0;
    std::int64_t den = 1;

    friend bool operator==(const Ppm& a, const Ppm& b)
    {
        return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
    }
};

/// Parses "100ppm", "-0.25ppm", or a bare number interpreted as ppm.
std::optional<Ppm> parse_ppm(std::string_view text);
std::string format_ppm(const Ppm& p);

/// Linear constant-drift clock.
///
/// A positive drift means the oscillator runs fast: one local second elapses
/// before one ideal second does.
class Oscillator {
public:
    Oscillator() = default;
    /// Throws InvalidArgument unless |drift| < 10^6 ppm and den > 0.
    explicit Oscillator(Ppm drift, SimTime reference_offset = SimTime::zero());

    [[nodiscard]] const Ppm& drift() const noexcept { return drift_; }
    [[nodiscard]] SimTime reference_offset() const noexcept { return offset_; }
    [[nodiscard]] bool ideal() const noexcept { return drift_.num == 0 && offset_ == SimTime::zero(); }

    /// ideal = offset + local * 10^6 / (10^6 + drift), rounded half away from zero.
    [[nodiscard]] SimTime local_to_ideal(SimTime local) const;
    /// Inverse mapping, same rounding rule.
    [[nodiscard]] SimTime ideal_to_local(SimTime ideal) const;

private:
    Ppm drift_{};
    SimTime offset_{};
};

} // namespace ivnsim
