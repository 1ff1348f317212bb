#include "ivnsim/clock.hpp"

#include "ivnsim/error.hpp"

#include <cctype>
#include <limits>
#include <numeric>

namespace ivnsim {

namespace {

constexpr std::int64_t kMillion = 1'000'000;

// Rounds num/den to the nearest integer, ties away from zero. den > 0.
__int128 div_round(__int128 num, __int128 den)
{
    const bool neg = num < 0;
    const __int128 a = neg ? -num : num;
    const __int128 q = (2 * a + den) / (2 * den);
    return neg ? -q : q;
}

SimTime to_time(__int128 v)
{
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
        throw TimeOverflow("oscillator mapping overflow");
    }
    return SimTime::from_ticks(static_cast<std::int64_t>(v));
}

} // namespace

std::optional<Ppm> parse_ppm(std::string_view text)
{
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
        text.remove_suffix(1);
    }
    if (text.size() >= 3 && text.substr(text.size() - 3) == "ppm") {
        text.remove_suffix(3);
    }
    if (text.empty()) {
        return std::nullopt;
    }
    bool neg = false;
    std::size_t i = 0;
    if (text[0] == '-' || text[0] == '+') {
        neg = text[0] == '-';
        i = 1;
    }
    std::int64_t num = 0;
    std::int64_t den = 1;
    bool dot = false;
    bool digits = false;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            if (num > std::numeric_limits<std::int64_t>::max() / 100) {
                return std::nullopt;
            }
            num = num * 10 + (c - '0');
            if (dot) {
                den *= 10;
            }
            digits = true;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            return std::nullopt;
        }
    }
    if (!digits) {
        return std::nullopt;
    }
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Ppm{neg ? -num : num, den};
}

std::string format_ppm(const Ppm& p)
{
    if (p.den == 1) {
        return std::to_string(p.num) + "ppm";
    }
    // den is a power of ten for parsed values; fall back to a fraction otherwise.
    std::int64_t d = p.den;
    int places = 0;
    while (d % 10 == 0) {
        d /= 10;
        ++places;
    }
    if (d != 1) {
        return std::to_string(p.num) + "/" + std::to_string(p.den) + "ppm";
    }
    const bool neg = p.num < 0;
    std::string digits = std::to_string(neg ? -p.num : p.num);
    while (static_cast<int>(digits.size()) <= places) {
        digits.insert(digits.begin(), '0');
    }
    digits.insert(digits.end() - places, '.');
    return (neg ? "-" : "") + digits + "ppm";
}

Oscillator::Oscillator(Ppm drift, SimTime reference_offset) : drift_(drift), offset_(reference_offset)
{
    if (drift_.den <= 0) {
        throw InvalidArgument("drift denominator must be positive");
    }
    const __int128 lim = static_cast<__int128>(kMillion) * drift_.den;
    const __int128 n = drift_.num;
    if (n >= lim || -n >= lim) {
        throw InvalidArgument("|drift| must be below 10^6 ppm");
    }
}

SimTime Oscillator::local_to_ideal(SimTime local) const
{
    const __int128 scale = static_cast<__int128>(kMillion) * drift_.den;
    const __int128 num = static_cast<__int128>(local.ticks()) * scale;
    const __int128 den = scale + drift_.num;
    return offset_ + to_time(div_round(num, den));
}

SimTime Oscillator::ideal_to_local(SimTime ideal) const
{
    const __int128 scale = static_cast<__int128>(kMillion) * drift_.den;
    const __int128 rel = static_cast<__int128>((ideal - offset_).ticks());
    return to_time(div_round(rel * (scale + drift_.num), scale));
}

} // namespace ivnsim
