#include "ivnsim/time.hpp"

#include "ivnsim/error.hpp"

#include <array>
#include <cctype>

namespace ivnsim {

SimTime operator+(SimTime a, SimTime b)
{
    std::int64_t r = 0;
    if (__builtin_add_overflow(a.ticks_, b.ticks_, &r)) {
        throw TimeOverflow("SimTime addition overflow");
    }
    return SimTime{r};
}

SimTime operator-(SimTime a, SimTime b)
{
    std::int64_t r = 0;
    if (__builtin_sub_overflow(a.ticks_, b.ticks_, &r)) {
        throw TimeOverflow("SimTime subtraction overflow");
    }
    return SimTime{r};
}

SimTime operator*(SimTime a, std::int64_t k)
{
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a.ticks_, k, &r)) {
        throw TimeOverflow("SimTime multiplication overflow");
    }
    return SimTime{r};
}

SimTime transmission_time(std::int64_t bits, std::int64_t rate_bps)
{
    if (rate_bps <= 0) {
        throw InvalidArgument("bit rate must be positive");
    }
    if (bits < 0) {
        throw InvalidArgument("negative bit count");
    }
    const __int128 num = static_cast<__int128>(bits) * kTicksPerSecond;
    const __int128 q = (num + rate_bps - 1) / rate_bps;
    if (q > std::numeric_limits<std::int64_t>::max()) {
        throw TimeOverflow("transmission time overflow");
    }
    return SimTime::from_ticks(static_cast<std::int64_t>(q));
}

namespace {

struct Decimal {
    __int128 mantissa = 0; // digits without the decimal point
    int scale = 0;         // number of fractional digits
    bool negative = false;
};

// Splits "<number><suffix>" and parses the number part exactly.
std::optional<std::pair<Decimal, std::string_view>> split_number(std::string_view text)
{
    Decimal d;
    std::size_t i = 0;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
        d.negative = text[i] == '-';
        ++i;
    }
    bool digits = false;
    bool dot = false;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits = true;
            d.mantissa = d.mantissa * 10 + (c - '0');
            if (dot) {
                ++d.scale;
            }
            if (d.mantissa > static_cast<__int128>(1) << 100) {
                return std::nullopt;
            }
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (!digits) {
        return std::nullopt;
    }
    return std::pair{d, text.substr(i)};
}

// mantissa * multiplier / 10^scale, exact or nullopt.
std::optional<std::int64_t> scale_exact(const Decimal& d, std::int64_t multiplier)
{
    __int128 v = d.mantissa * multiplier;
    for (int k = 0; k < d.scale; ++k) {
        if (v % 10 != 0) {
            return std::nullopt;
        }
        v /= 10;
    }
    if (d.negative) {
        v = -v;
    }
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
        return std::nullopt;
    }
    return static_cast<std::int64_t>(v);
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace

std::optional<SimTime> parse_time(std::string_view text)
{
    auto split = split_number(trim(text));
    if (!split) {
        return std::nullopt;
    }
    auto [num, unit] = *split;
    unit = trim(unit);
    std::int64_t mult = 0;
    if (unit == "ps") {
        mult = 1;
    } else if (unit == "ns") {
        mult = 1'000;
    } else if (unit == "us") {
        mult = 1'000'000;
    } else if (unit == "ms") {
        mult = 1'000'000'000;
    } else if (unit == "s") {
        mult = kTicksPerSecond;
    } else {
        return std::nullopt;
    }
    auto v = scale_exact(num, mult);
    if (!v) {
        return std::nullopt;
    }
    return SimTime::from_ticks(*v);
}

std::optional<std::int64_t> parse_rate(std::string_view text)
{
    auto split = split_number(trim(text));
    if (!split) {
        return std::nullopt;
    }
    auto [num, unit] = *split;
    unit = trim(unit);
    std::int64_t mult = 0;
    if (unit == "b/s" || unit == "bps" || unit == "bit/s") {
        mult = 1;
    } else if (unit == "kb/s" || unit == "kbps" || unit == "kbit/s") {
        mult = 1'000;
    } else if (unit == "Mb/s" || unit == "Mbps" || unit == "Mbit/s") {
        mult = 1'000'000;
    } else if (unit == "Gb/s" || unit == "Gbps" || unit == "Gbit/s") {
        mult = 1'000'000'000;
    } else {
        return std::nullopt;
    }
    auto v = scale_exact(num, mult);
    if (!v || *v <= 0) {
        return std::nullopt;
    }
    return v;
}

std::optional<std::int64_t> parse_bytes(std::string_view text)
{
    auto split = split_number(trim(text));
    if (!split) {
        return std::nullopt;
    }
    auto [num, unit] = *split;
    unit = trim(unit);
    std::int64_t mult = 0;
    if (unit.empty() || unit == "B") {
        mult = 1;
    } else if (unit == "kB") {
        mult = 1'000;
    } else {
        return std::nullopt;
    }
    auto v = scale_exact(num, mult);
    if (!v || *v < 0) {
        return std::nullopt;
    }
    return v;
}

std::string format_time(SimTime t)
{
    static constexpr std::array<std::pair<std::int64_t, const char*>, 5> units{{
        {kTicksPerSecond, "s"},
        {1'000'000'000, "ms"},
        {1'000'000, "us"},
        {1'000, "ns"},
        {1, "ps"},
    }};
    const std::int64_t v = t.ticks();
    if (v == 0) {
        return "0s";
    }
    for (const auto& [div, name] : units) {
        if (v % div == 0) {
            return std::to_string(v / div) + name;
        }
    }
    return std::to_string(v) + "ps";
}

std::string format_rate(std::int64_t bps)
{
    if (bps != 0 && bps % 1'000'000'000 == 0) {
        return std::to_string(bps / 1'000'000'000) + "Gb/s";
    }
    if (bps != 0 && bps % 1'000'000 == 0) {
        return std::to_string(bps / 1'000'000) + "Mb/s";
    }
    if (bps != 0 && bps % 1'000 == 0) {
        return std::to_string(bps / 1'000) + "kb/s";
    }
    return std::to_string(bps) + "b/s";
}

std::optional<std::pair<SimTime, SimTime>> parse_window(std::string_view text)
{
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        return std::nullopt;
    }
    auto t0 = parse_time(text.substr(0, colon));
    auto t1 = parse_time(text.substr(colon + 1));
    if (!t0 || !t1 || *t1 <= *t0) {
        return std::nullopt;
    }
    return std::pair{*t0, *t1};
}

} // namespace ivnsim
