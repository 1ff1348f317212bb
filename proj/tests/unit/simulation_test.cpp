#include "generators.hpp"

#include "ivnsim/error.hpp"
#include "ivnsim/simulation.hpp"

#include <gtest/gtest.h>

using namespace ivnsim;
using namespace ivnsim::testing;

namespace {

std::string small_network() { return read_text(std::string(IVNSIM_SCENARIO_DIR) + "/small_network.andl"); }

RunOptions horizon(SimTime h)
{
    RunOptions o;
    o.horizon = h;
    return o;
}

// CAN frame time at 500 kbit/s without stuffing: (47 + 8n) bits * 2 us.
SimTime can_time(int n) { return SimTime::us(2 * (47 + 8 * n)); }

// Ethernet frame time at 100 Mbit/s: (payload + 38) bytes * 80 ns.
SimTime eth_time(int payload) { return SimTime::ns(80 * (payload + 38)); }

} // namespace

TEST(Simulation, AvbStreamLatencyIsTwoFramesPlusSwitchDelay)
{
    auto sim = run_text(small_network(), horizon(SimTime::ms(10)));
    const auto s = sim->samples_for("msg2", "en2");
    ASSERT_EQ(s.size(), 81u); // releases at 0, 125 us, ... 10 ms
    for (const auto& x : s) {
        EXPECT_EQ(x.latency(), eth_time(500) + SimTime::us(8) + eth_time(500));
    }
}

TEST(Simulation, StationRecordsDecomposeThePath)
{
    andl::CompileOptions co;
    co.overrides = {{"metrics.stations", "true"}};
    auto sim = run_text(small_network(), horizon(SimTime::ms(1)), co);
    const auto& cfg = sim->config();
    const auto msg2 = *cfg.message_index("msg2");
    const auto s1 = *cfg.device_index("s1");
    int seen = 0;
    for (const auto& st : sim->stations()) {
        if (st.message == msg2 && st.device == s1) {
            EXPECT_EQ(st.arrival, SimTime::us(125) * static_cast<std::int64_t>(st.instance) + eth_time(500));
            ++seen;
        }
    }
    EXPECT_EQ(seen, 9);
}

TEST(Simulation, CanToCanThroughOneGatewayAddsProcessingDelay)
{
    AndlBuilder b;
    b.can_bus("cb1");
    b.can_bus("cb2");
    b.gateway("gw");
    b.node("a");
    b.node("z");
    b.attach("a", "cb1");
    b.attach("gw", "cb1");
    b.attach("gw", "cb2");
    b.attach("z", "cb2");
    b.message({.name = "m", .sender = "a", .receivers = {"z"}, .payload = 8, .mapping = {"canbus: can{id 5;}", "gw"}});
    auto sim = run_text(b.text(), horizon(SimTime::ms(100)));
    const auto s = sim->samples_for("m", "z");
    ASSERT_EQ(s.size(), 11u);
    for (const auto& x : s) {
        EXPECT_EQ(x.latency(), can_time(8) + SimTime::us(40) + can_time(8));
    }
}

TEST(Simulation, PooledFlowRespectsHoldUpAndDeliversEveryInstance)
{
    auto sim = run_text(small_network(), horizon(SimTime::ms(100)));
    const auto& st = sim->report().messages[*sim->config().message_index("msg1")];
    EXPECT_EQ(st.released, 101u);
    EXPECT_EQ(st.delivered, 101u);
    for (const auto& r : sim->residences()) {
        EXPECT_LE(r.flush - r.arrival, SimTime::ms(2));
        EXPECT_EQ(r.holdup, SimTime::ms(2));
    }
    EXPECT_EQ(sim->report().unknown_destination, 0u);
    EXPECT_EQ(sim->report().no_route, 0u);
    EXPECT_EQ(sim->report().tt_violations, 0u);
}

TEST(Simulation, ZeroHoldUpSendsOneRecordPerFrame)
{
    auto sim = run_text(aggregation(4, "none"), horizon(SimTime::s(1)));
    std::uint64_t backbone = 0;
    for (const auto* p : sim->ports()) {
        if (p->device() == "gw1" || p->device() == "gw2") {
            backbone += p->frames_sent();
        }
    }
    std::uint64_t released = 0;
    for (const auto& m : sim->report().messages) {
        released += m.released;
    }
    EXPECT_EQ(backbone, released);
    EXPECT_EQ(sim->samples().size(), released);
}

TEST(Simulation, PoolingReducesBackboneFrames)
{
    auto pooled = run_text(aggregation(4, "config1"), horizon(SimTime::s(1)));
    auto direct = run_text(aggregation(4, "none"), horizon(SimTime::s(1)));
    auto frames = [](const Simulation& s) {
        std::uint64_t n = 0;
        for (const auto* p : s.ports()) {
            n += p->device().starts_with("gw") ? p->frames_sent() : 0;
        }
        return n;
    };
    EXPECT_LT(frames(*pooled), frames(*direct));
    EXPECT_EQ(pooled->samples().size(), direct->samples().size());
}

TEST(Simulation, ConservationOfCopies)
{
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto sim = run_text(random_rc(seed), horizon(SimTime::ms(200)));
        const auto& cfg = sim->config();
        for (std::size_t m = 0; m < cfg.messages.size(); ++m) {
            const auto& st = sim->report().messages[m];
            EXPECT_EQ(st.released * cfg.messages[m].receivers.size(), st.delivered + st.dropped)
                << cfg.messages[m].name;
        }
    }
}

TEST(Simulation, SmallQueuesDropAndCount)
{
    andl::CompileOptions co;
    co.overrides = {{"sim.queueCapacity", "1"}};
    auto sim = run_text(avb_chain(2), horizon(SimTime::ms(50)), co);
    std::uint64_t dropped = 0;
    std::uint64_t port_drops = 0;
    for (const auto& m : sim->report().messages) {
        dropped += m.dropped;
    }
    for (const auto* p : sim->ports()) {
        port_drops += p->drops();
    }
    EXPECT_GT(port_drops, 0u);
    EXPECT_EQ(dropped, port_drops);
}

TEST(Simulation, MulticastSendsOneCopyPerBranch)
{
    auto sim = run_text(multicast_fanout(4, true), horizon(SimTime::ms(10)));
    const auto released = sim->report().messages[0].released;
    EXPECT_EQ(sim->port("src", "sw0")->frames_sent(), released);
    EXPECT_EQ(sim->port("sw0", "sw1")->frames_sent(), released);
    EXPECT_EQ(sim->port("sw0", "sw2")->frames_sent(), released);
    EXPECT_EQ(sim->port("sw1", "r0")->frames_sent(), released);
    EXPECT_EQ(sim->port("sw2", "r1")->frames_sent(), released);
    EXPECT_EQ(sim->samples().size(), 4 * released);
}

TEST(Simulation, UnicastCopiesShareTheFirstHop)
{
    auto sim = run_text(multicast_fanout(4, false), horizon(SimTime::ms(10)));
    std::uint64_t released = 0;
    for (const auto& m : sim->report().messages) {
        released += m.released;
    }
    EXPECT_EQ(sim->port("src", "sw0")->frames_sent(), released);
    EXPECT_EQ(sim->port("sw0", "sw1")->frames_sent(), released / 2);
}

TEST(Simulation, SameSeedSameTraceHash)
{
    RunOptions o = horizon(SimTime::ms(50));
    o.trace_events = true;
    o.seed = 11;
    auto a = run_text(random_avb(3), o);
    auto b = run_text(random_avb(3), o);
    EXPECT_EQ(a->report().trace_hash, b->report().trace_hash);
    EXPECT_EQ(metrics_hash(*a), metrics_hash(*b));
    EXPECT_EQ(metrics_hash(*a, ExportFormat::Structured), metrics_hash(*b, ExportFormat::Structured));
}

TEST(Simulation, RejectsInvalidOptions)
{
    const auto cfg = compile_or_throw(small_network());
    EXPECT_THROW(Simulation(cfg, horizon(SimTime::zero())), Error);
    RunOptions o = horizon(SimTime::ms(1));
    o.window = std::pair{SimTime::ms(1), SimTime::ms(1)};
    EXPECT_THROW(Simulation(cfg, o), Error);
}

TEST(Simulation, ReportNamesEverySegmentAndMessage)
{
    auto sim = run_text(small_network(), horizon(SimTime::ms(5)));
    const auto text = format_report(sim->config(), sim->report());
    for (const char* s : {"msg1", "msg2", "backbone", "canbus"}) {
        EXPECT_NE(text.find(s), std::string::npos) << s;
    }
}
