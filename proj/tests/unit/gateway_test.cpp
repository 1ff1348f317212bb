#include "ivnsim/error.hpp"
#include "ivnsim/gateway.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ivnsim;

namespace {

CanRecord rec(std::uint16_t id, std::uint8_t dlc, std::uint8_t fill = 0xA5)
{
    CanRecord r;
    r.id = id;
    r.dlc = dlc;
    for (int i = 0; i < dlc; ++i) {
        r.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(fill + i);
    }
    return r;
}

PoolEntry entry(std::uint16_t id, SimTime holdup, ClassTag tag = ClassTag::tt(102), std::uint32_t dst = 3)
{
    PoolEntry e;
    e.frame.id = id;
    e.frame.payload_len = 8;
    e.holdup = holdup;
    e.tag = tag;
    e.dst = dst;
    return e;
}

} // namespace

TEST(Holdup, Config1Table)
{
    EXPECT_EQ(compute_holdup(50, SimTime::ms(10), HoldupPolicy::Config1), SimTime::zero());
    EXPECT_EQ(compute_holdup(150, SimTime::ms(100), HoldupPolicy::Config1), SimTime::ms(25));
    EXPECT_EQ(compute_holdup(250, SimTime::ms(100), HoldupPolicy::Config1), SimTime::ms(50));
    EXPECT_EQ(compute_holdup(510, SimTime::ms(200), HoldupPolicy::Config1), SimTime::ms(150));
}

TEST(Holdup, Config2AndNone)
{
    EXPECT_EQ(compute_holdup(50, SimTime::ms(10), HoldupPolicy::Config2), SimTime::ms(1));
    EXPECT_EQ(compute_holdup(510, SimTime::ms(200), HoldupPolicy::Config2), SimTime::ms(150));
    EXPECT_EQ(compute_holdup(510, SimTime::ms(200), HoldupPolicy::None), SimTime::zero());
    EXPECT_EQ(parse_holdup_policy("config1"), HoldupPolicy::Config1);
}

TEST(Pool, FirstInsertSetsDeadline)
{
    Pool p;
    auto e = entry(37, SimTime::ms(2));
    e.arrival = SimTime::zero();
    EXPECT_TRUE(p.insert(e));
    EXPECT_EQ(p.deadline(), SimTime::ms(2));
}

TEST(Pool, DeadlineIsMinimumOfCandidates)
{
    Pool p;
    auto a = entry(1, SimTime::ms(5));
    p.insert(a);
    auto b = entry(2, SimTime::ms(3));
    EXPECT_TRUE(p.insert(b));
    EXPECT_EQ(p.deadline(), SimTime::ms(3));
    auto c = entry(3, SimTime::ms(10));
    EXPECT_FALSE(p.insert(c));
    EXPECT_EQ(p.deadline(), SimTime::ms(3));
}

TEST(Pool, FlushEmptiesInInsertionOrder)
{
    Pool p;
    for (std::uint16_t id : {9, 4, 7}) {
        p.insert(entry(id, SimTime::ms(1)));
    }
    const auto out = p.flush();
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].frame.id, 9);
    EXPECT_EQ(out[2].frame.id, 7);
    EXPECT_TRUE(p.empty());
    EXPECT_FALSE(p.deadline());
}

TEST(PoolTimer, EarliestHoldupReleasesEveryBufferedFrame)
{
    Kernel k;
    std::vector<std::pair<SimTime, std::vector<std::uint16_t>>> flushes;
    PoolTimer pt(k, "gw.p", [&](std::vector<PoolEntry> es, SimTime now) {
        std::vector<std::uint16_t> ids;
        for (const auto& e : es) {
            ids.push_back(e.frame.id);
        }
        flushes.emplace_back(now, ids);
    });
    // msg2's hold-up (t = 1 ms + 2 ms) expires first
    k.schedule(SimTime::zero(), 0, EventKind::Timer, [&] { pt.insert(entry(1, SimTime::ms(10))); });
    k.schedule(SimTime::ms(1), 0, EventKind::Timer, [&] { pt.insert(entry(2, SimTime::ms(2))); });
    k.schedule(SimTime::ms(2), 0, EventKind::Timer, [&] { pt.insert(entry(3, SimTime::ms(8))); });
    k.run_until(SimTime::ms(20));
    ASSERT_EQ(flushes.size(), 1u);
    EXPECT_EQ(flushes[0].first, SimTime::ms(3));
    EXPECT_EQ(flushes[0].second, (std::vector<std::uint16_t>{1, 2, 3}));
    EXPECT_TRUE(pt.pool().empty());
}

TEST(PoolTimer, ArrivalAtDeadlineTickJoinsTheFlush)
{
    Kernel k;
    std::vector<std::size_t> sizes;
    PoolTimer pt(k, "gw.p", [&](std::vector<PoolEntry> es, SimTime) { sizes.push_back(es.size()); });
    k.schedule(SimTime::zero(), 0, EventKind::Timer, [&] { pt.insert(entry(1, SimTime::ms(1))); });
    k.schedule(SimTime::zero(), 0, EventKind::Timer, [&] {
        k.schedule(SimTime::ms(1), 0, EventKind::Timer, [&] { pt.insert(entry(2, SimTime::ms(5))); });
    });
    k.run_until(SimTime::ms(20));
    EXPECT_EQ(sizes, (std::vector<std::size_t>{2}));
}

TEST(PoolTimer, ZeroHoldupFlushesImmediately)
{
    Kernel k;
    std::vector<SimTime> at;
    PoolTimer pt(k, "gw.p", [&](std::vector<PoolEntry> es, SimTime now) {
        EXPECT_EQ(es.size(), 1u);
        at.push_back(now);
    });
    k.schedule(SimTime::us(7), 0, EventKind::Timer, [&] { pt.insert(entry(1, SimTime::zero())); });
    k.run_until(SimTime::ms(1));
    EXPECT_EQ(at, (std::vector<SimTime>{SimTime::us(7)}));
}

TEST(Aggregate, SingleSmallRecordIsPaddedToMinimum)
{
    const std::vector<CanRecord> rs{rec(37, 6)};
    const auto out = encode_aggregate(rs);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].size(), 46u);
    EXPECT_EQ(decode_aggregate(out[0]), rs);
}

TEST(Aggregate, TwentyThreeFullRecordsFitOneFrame)
{
    std::vector<CanRecord> rs;
    for (int i = 0; i < 23; ++i) {
        rs.push_back(rec(static_cast<std::uint16_t>(100 + i), 8, static_cast<std::uint8_t>(i)));
    }
    const auto out = encode_aggregate(rs);
    ASSERT_EQ(out.size(), 1u);
    // 2-byte count, then 23 records of 2-byte id + 1-byte dlc + 8 data bytes
    EXPECT_EQ(out[0].size(), 2u + 23u * (2u + 1u + 8u));
    EXPECT_EQ(aggregate_size(rs), 255);
    EXPECT_EQ(decode_aggregate(out[0]), rs);
}

TEST(Aggregate, SplitsAtMaximumPayload)
{
    std::vector<CanRecord> rs;
    for (int i = 0; i < 300; ++i) {
        rs.push_back(rec(static_cast<std::uint16_t>(i), 8));
    }
    const auto out = encode_aggregate(rs);
    // 136 records of 11 B fill 1498 B
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].size(), 1498u);
    std::vector<CanRecord> back;
    for (const auto& p : out) {
        EXPECT_LE(p.size(), 1500u);
        EXPECT_GE(p.size(), 46u);
        const auto part = decode_aggregate(p);
        back.insert(back.end(), part.begin(), part.end());
    }
    EXPECT_EQ(back, rs);
}

TEST(Aggregate, ThreeRecordsDecodeToThreeFrames)
{
    const std::vector<CanRecord> rs{rec(1, 8), rec(2, 0), rec(3, 4)};
    const auto out = encode_aggregate(rs);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(decode_aggregate(out[0]).size(), 3u);
}

TEST(Aggregate, OneRecordDecodesToOneFrame)
{
    const auto out = encode_aggregate(std::vector<CanRecord>{rec(5, 2)});
    EXPECT_EQ(decode_aggregate(out[0]).size(), 1u);
}

TEST(Aggregate, TruncatedRecordHeaderIsMalformed)
{
    const std::vector<std::uint8_t> bad{0x00, 0x01, 0x00};
    EXPECT_THROW(decode_aggregate(bad), MalformedAggregate);
}

TEST(Aggregate, CorruptionIsDetected)
{
    auto p = encode_aggregate(std::vector<CanRecord>{rec(5, 2)})[0];
    auto dlc = p;
    dlc[4] = 9;
    EXPECT_THROW(decode_aggregate(dlc), MalformedAggregate);
    auto pad = p;
    pad.back() = 1;
    EXPECT_THROW(decode_aggregate(pad), MalformedAggregate);
    auto id = p;
    id[2] = 0x08;
    EXPECT_THROW(decode_aggregate(id), MalformedAggregate);
}

TEST(Aggregate, EmptyInputYieldsNothing)
{
    EXPECT_TRUE(encode_aggregate(std::vector<CanRecord>{}).empty());
}

TEST(Aggregate, RoundTripProperty)
{
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> n(1, 400);
    std::uniform_int_distribution<int> id(0, 0x7FF);
    std::uniform_int_distribution<int> dlc(0, 8);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int iter = 0; iter < 300; ++iter) {
        std::vector<CanRecord> rs(static_cast<std::size_t>(n(rng)));
        for (auto& r : rs) {
            r.id = static_cast<std::uint16_t>(id(rng));
            r.dlc = static_cast<std::uint8_t>(dlc(rng));
            for (int i = 0; i < r.dlc; ++i) {
                r.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(byte(rng));
            }
        }
        std::vector<CanRecord> back;
        for (const auto& p : encode_aggregate(rs)) {
            ASSERT_LE(p.size(), 1500u);
            ASSERT_GE(p.size(), 46u);
            const auto part = decode_aggregate(p);
            back.insert(back.end(), part.begin(), part.end());
        }
        ASSERT_EQ(back, rs);
    }
}

TEST(Grouping, SplitsByClassAndDestination)
{
    std::vector<PoolEntry> es{entry(1, {}, ClassTag::tt(102), 3), entry(2, {}, ClassTag::be(1), 3),
                              entry(3, {}, ClassTag::tt(102), 3), entry(4, {}, ClassTag::be(6), 3),
                              entry(5, {}, ClassTag::tt(102), 4)};
    const auto groups = group_for_frames(es);
    ASSERT_EQ(groups.size(), 3u);
    EXPECT_EQ(groups[0].tag, ClassTag::tt(102));
    EXPECT_EQ(groups[0].entries.size(), 2u);
    EXPECT_EQ(groups[1].tag.cls, TrafficClass::BE);
    EXPECT_EQ(groups[1].tag.priority, 6);
    EXPECT_EQ(groups[2].dst, 4u);
}

TEST(Grouping, AvbUpgradesToClassA)
{
    std::vector<PoolEntry> es{entry(1, {}, ClassTag::avb(false, 9), 3), entry(2, {}, ClassTag::avb(true, 9), 3)};
    const auto groups = group_for_frames(es);
    ASSERT_EQ(groups.size(), 1u);
    EXPECT_EQ(groups[0].tag.cls, TrafficClass::AVB_A);
}

TEST(Routing, MatchesIngressAndKey)
{
    RoutingTable t;
    RouteAction to_tt;
    to_tt.kind = RouteAction::Kind::ToEthernet;
    to_tt.pool = "gw1_1";
    to_tt.holdup = SimTime::ms(2);
    to_tt.tag = ClassTag::tt(102);
    t.add("cb1", can_key(37), to_tt);
    t.add("cb1", can_key(37), to_tt);
    const auto hit = t.route("cb1", "can:37");
    ASSERT_EQ(hit.size(), 1u);
    EXPECT_EQ(hit[0].tag, ClassTag::tt(102));
    EXPECT_EQ(hit[0].pool, "gw1_1");
    EXPECT_TRUE(t.route("cb1", can_key(999)).empty());
    EXPECT_TRUE(t.route("cb2", can_key(37)).empty());
}

TEST(Routing, TwoCanDestinationsAreTwoActions)
{
    RoutingTable t;
    RouteAction a;
    a.bus = "cb2";
    a.can_id = 5;
    RouteAction b = a;
    b.bus = "cb3";
    t.add("eth:en1", "tt:9", a);
    t.add("eth:en1", "tt:9", b);
    EXPECT_EQ(t.route("eth:en1", class_key(ClassTag::tt(9))).size(), 2u);
    EXPECT_EQ(class_key(ClassTag::be(4)), "be:4");
    EXPECT_EQ(class_key(ClassTag::rc(3, SimTime::ms(1))), "rc:3");
    EXPECT_EQ(class_key(ClassTag::avb(true, 2)), "avb:2");
}
