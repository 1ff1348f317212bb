#include "ivnsim/error.hpp"
#include "ivnsim/ethernet.hpp"

#include <gtest/gtest.h>

using namespace ivnsim;

namespace {

// 8 preamble/SFD + 14 header + 4 FCS + 12 IFG
constexpr int kOverhead = 8 + 14 + 4 + 12;

__int128 bits(std::int64_t b)
{
    return static_cast<__int128>(b) * kCreditScale;
}

} // namespace

TEST(EthDuration, MinimumFrame)
{
    EXPECT_EQ(eth_wire_bits(46), (46 + kOverhead) * 8);
    EXPECT_EQ(eth_wire_bits(46), 672);
    EXPECT_EQ(eth_frame_duration(46, 100'000'000), SimTime::ns(6720));
}

TEST(EthDuration, Msg2Payload)
{
    EXPECT_EQ(eth_wire_bits(500), 538 * 8);
    EXPECT_EQ(eth_frame_duration(500, 100'000'000), SimTime::ns(43'040));
}

TEST(EthDuration, MaximumFrame)
{
    EXPECT_EQ(eth_wire_bits(1500), 1538 * 8);
    EXPECT_EQ(eth_frame_duration(1500, 100'000'000), SimTime::ns(123'040));
}

TEST(EthDuration, PayloadOutOfRange)
{
    EXPECT_THROW(eth_wire_bits(45), PayloadOutOfRange);
    EXPECT_THROW(eth_wire_bits(1501), PayloadOutOfRange);
}

TEST(Cbs, TransmittingDrainsAtSendSlope)
{
    auto s = CreditState::make(25'000'000, 100'000'000);
    EXPECT_EQ(s.send_slope, -75'000'000);
    s = cbs_update(s, SimTime::ns(6720), CbsPhase::Transmitting);
    EXPECT_EQ(s.credit, bits(-504));
}

TEST(Cbs, WaitingRecoversAtIdleSlope)
{
    auto s = CreditState::make(25'000'000, 100'000'000);
    s.credit = bits(-504);
    EXPECT_EQ(cbs_time_to_zero(s), SimTime::ns(20'160));
    s = cbs_update(s, SimTime::ns(20'160), CbsPhase::IdleWaiting);
    EXPECT_EQ(s.credit, 0);
}

TEST(Cbs, EmptyQueueResetsPositiveCredit)
{
    auto s = CreditState::make(25'000'000, 100'000'000);
    s.credit = bits(300);
    s = cbs_update(s, SimTime::ns(1), CbsPhase::QueueEmpty);
    EXPECT_EQ(s.credit, 0);
}

TEST(Cbs, EmptyQueueNegativeCreditStopsAtZero)
{
    auto s = CreditState::make(25'000'000, 100'000'000);
    s.credit = bits(-504);
    s = cbs_update(s, SimTime::us(100), CbsPhase::QueueEmpty);
    EXPECT_EQ(s.credit, 0);
}

TEST(Bag, GateClosedUntilLastPlusBag)
{
    BagState s{1, SimTime::us(500), SimTime::zero()};
    EXPECT_EQ(bag_gate(s, SimTime::us(100)), SimTime::us(500));
}

TEST(Bag, GateAlreadyOpen)
{
    BagState s{1, SimTime::us(500), SimTime::zero()};
    EXPECT_EQ(bag_gate(s, SimTime::us(600)), SimTime::us(600));
}

TEST(Bag, FirstFrameLeavesNow)
{
    BagState s{1, SimTime::us(500), std::nullopt};
    EXPECT_EQ(bag_gate(s, SimTime::us(42)), SimTime::us(42));
}

namespace {

TdmaSchedule one_window()
{
    TdmaSchedule s;
    s.cycle_length = SimTime::ms(1);
    s.windows.push_back(TdmaWindow{102, "gw1->s1", SimTime::us(100), SimTime::ns(6720)});
    return s;
}

} // namespace

TEST(TtReceive, InsideWindowAccepted)
{
    EXPECT_EQ(tt_receive_check(102, "gw1->s1", SimTime::us(103), one_window(), SimTime::zero()), TtCheck::Accept);
    // later cycles are taken modulo the cycle
    EXPECT_EQ(tt_receive_check(102, "gw1->s1", SimTime::ms(7) + SimTime::us(103), one_window(), SimTime::zero()),
              TtCheck::Accept);
}

TEST(TtReceive, LateArrivalWithoutToleranceViolates)
{
    const SimTime end = SimTime::us(100) + SimTime::ns(6720);
    EXPECT_EQ(tt_receive_check(102, "gw1->s1", end + SimTime::us(1), one_window(), SimTime::zero()),
              TtCheck::Violation);
}

TEST(TtReceive, ToleranceWidensWindow)
{
    const SimTime end = SimTime::us(100) + SimTime::ns(6720);
    EXPECT_EQ(tt_receive_check(102, "gw1->s1", end + SimTime::ns(500), one_window(), SimTime::us(1)),
              TtCheck::Accept);
}

TEST(TtReceive, WrongLinkOrCtViolates)
{
    EXPECT_EQ(tt_receive_check(102, "s1->gw1", SimTime::us(103), one_window(), SimTime::zero()), TtCheck::Violation);
    EXPECT_EQ(tt_receive_check(7, "gw1->s1", SimTime::us(103), one_window(), SimTime::zero()), TtCheck::Violation);
}

TEST(TdmaScheduleInvariants, OverlapAndCycleEndReported)
{
    TdmaSchedule s;
    s.cycle_length = SimTime::ms(1);
    s.windows.push_back(TdmaWindow{1, "a->b", SimTime::zero(), SimTime::us(10)});
    s.windows.push_back(TdmaWindow{2, "a->b", SimTime::us(5), SimTime::us(10)});
    s.windows.push_back(TdmaWindow{3, "c->d", SimTime::us(995), SimTime::us(10)});
    EXPECT_EQ(s.violations().size(), 2u);
    EXPECT_EQ(s.windows_for("a->b").size(), 2u);
}

TEST(ClassTags, KeysAndDescriptions)
{
    EXPECT_EQ(port_key("gw1", "s1"), "gw1->s1");
    EXPECT_EQ(parse_traffic_class("AVB_A"), TrafficClass::AVB_A);
    EXPECT_FALSE(parse_traffic_class("XX"));
    EXPECT_EQ(ClassTag::rc(3, SimTime::ms(1), 2).bag, SimTime::ms(1));
}
