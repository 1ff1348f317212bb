#include "ivnsim/clock.hpp"
#include "ivnsim/error.hpp"
#include "ivnsim/time.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ivnsim;

namespace {

// ideal = local * 10^6 / (10^6 + drift), rounded half away from zero
std::int64_t rational_ideal(std::int64_t local_ps, std::int64_t drift_ppm)
{
    const __int128 num = static_cast<__int128>(local_ps) * 1'000'000;
    const __int128 den = 1'000'000 + drift_ppm;
    __int128 q = num / den;
    const __int128 r = num % den;
    if (2 * r >= den) {
        ++q;
    }
    return static_cast<std::int64_t>(q);
}

} // namespace

TEST(Time, UnitConstructorsAreExact)
{
    EXPECT_EQ(SimTime::ns(1).ticks(), 1'000);
    EXPECT_EQ(SimTime::us(1).ticks(), 1'000'000);
    EXPECT_EQ(SimTime::ms(1).ticks(), 1'000'000'000);
    EXPECT_EQ(SimTime::s(1).ticks(), 1'000'000'000'000);
}

TEST(Time, ArithmeticOverflowThrows)
{
    EXPECT_THROW(SimTime::max() + SimTime::ps(1), TimeOverflow);
    EXPECT_THROW(SimTime::ps(std::numeric_limits<std::int64_t>::min()) - SimTime::ps(1), TimeOverflow);
    EXPECT_THROW(SimTime::s(1) * 10'000'000, TimeOverflow);
    EXPECT_EQ((SimTime::ms(3) * 4).ticks(), SimTime::ms(12).ticks());
}

TEST(Time, ParseTimeUnits)
{
    EXPECT_EQ(parse_time("125us"), SimTime::us(125));
    EXPECT_EQ(parse_time("2ms"), SimTime::ms(2));
    EXPECT_EQ(parse_time("1.5s"), SimTime::ms(1500));
    EXPECT_EQ(parse_time("10ns"), SimTime::ns(10));
    EXPECT_EQ(parse_time("500ps"), SimTime::ps(500));
    EXPECT_FALSE(parse_time("10"));
    EXPECT_FALSE(parse_time("1.0001ps"));
    EXPECT_FALSE(parse_time("abc"));
}

TEST(Time, ParseRatesAndBytes)
{
    EXPECT_EQ(parse_rate("100Mb/s"), 100'000'000);
    EXPECT_EQ(parse_rate("500kb/s"), 500'000);
    EXPECT_EQ(parse_rate("1Gb/s"), 1'000'000'000);
    EXPECT_EQ(parse_rate("9600b/s"), 9600);
    EXPECT_EQ(parse_bytes("6B"), 6);
    EXPECT_EQ(parse_bytes("500B"), 500);
    EXPECT_EQ(parse_bytes("1kB"), 1000);
}

TEST(Time, FormatUsesLargestExactUnit)
{
    EXPECT_EQ(format_time(SimTime::zero()), "0s");
    EXPECT_EQ(format_time(SimTime::ms(2)), "2ms");
    EXPECT_EQ(format_time(SimTime::us(125)), "125us");
    EXPECT_EQ(format_time(SimTime::ns(6720)), "6720ns");
    EXPECT_EQ(format_time(SimTime::ps(3)), "3ps");
}

TEST(Time, TransmissionTimeRoundsUp)
{
    EXPECT_EQ(transmission_time(672, 100'000'000), SimTime::ns(6720));
    EXPECT_EQ(transmission_time(1, 3), SimTime::ps(333'333'333'334));
}

TEST(Time, ParseWindow)
{
    auto w = parse_window("100ms:900ms");
    ASSERT_TRUE(w);
    EXPECT_EQ(w->first, SimTime::ms(100));
    EXPECT_EQ(w->second, SimTime::ms(900));
    EXPECT_FALSE(parse_window("5ms"));
}

TEST(Clock, IdealClockIsIdentity)
{
    Oscillator osc;
    EXPECT_EQ(osc.local_to_ideal(SimTime::s(1)), SimTime::s(1));
}

TEST(Clock, PositiveDriftShortensIdealTime)
{
    Oscillator osc(Ppm{100, 1});
    const SimTime t = osc.local_to_ideal(SimTime::s(1));
    EXPECT_EQ(t.ticks(), rational_ideal(SimTime::s(1).ticks(), 100));
    // 0.999 900 01 s to the nanosecond
    EXPECT_LE(std::abs(t.ticks() - SimTime::ns(999'900'010).ticks()), 1'000);
}

TEST(Clock, NegativeDriftLengthensIdealTime)
{
    Oscillator osc(Ppm{-100, 1});
    const SimTime t = osc.local_to_ideal(SimTime::s(1));
    EXPECT_EQ(t.ticks(), rational_ideal(SimTime::s(1).ticks(), -100));
    EXPECT_LE(std::abs(t.ticks() - SimTime::ns(1'000'100'010).ticks()), 1'000);
}

TEST(Clock, ReferenceOffsetShiftsIdealTime)
{
    Oscillator osc(Ppm{0, 1}, SimTime::us(5));
    EXPECT_EQ(osc.local_to_ideal(SimTime::ms(1)), SimTime::ms(1) + SimTime::us(5));
}

TEST(Clock, RejectsDriftBeyondOneMillionPpm)
{
    EXPECT_THROW(Oscillator(Ppm{-1'000'000, 1}), InvalidArgument);
    EXPECT_THROW(Oscillator(Ppm{1, 0}), InvalidArgument);
}

TEST(Clock, RoundTripWithinOneTickProperty)
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> drift(-1000, 1000);
    std::uniform_int_distribution<std::int64_t> t(0, SimTime::s(100).ticks());
    for (int i = 0; i < 20'000; ++i) {
        Oscillator osc(Ppm{drift(rng), 1});
        const SimTime local = SimTime::ps(t(rng));
        const SimTime back = osc.ideal_to_local(osc.local_to_ideal(local));
        ASSERT_LE(std::abs((back - local).ticks()), 1) << "drift " << osc.drift().num << " local " << local.ticks();
    }
}

TEST(Clock, ParsePpm)
{
    EXPECT_EQ(parse_ppm("100ppm"), (Ppm{100, 1}));
    EXPECT_EQ(parse_ppm("-0.25ppm"), (Ppm{-1, 4}));
    EXPECT_EQ(parse_ppm("3"), (Ppm{3, 1}));
    EXPECT_FALSE(parse_ppm("fast"));
}
