#include "generators.hpp"

#include "ivnsim/andl.hpp"
#include "ivnsim/config.hpp"
#include "ivnsim/error.hpp"

#include <gtest/gtest.h>

using namespace ivnsim;
using namespace ivnsim::testing;

namespace {

NetworkConfig small(const andl::CompileOptions& o = {})
{
    return compile_or_throw(read_text(std::string(IVNSIM_SCENARIO_DIR) + "/small_network.andl"), o);
}

const RuleSpec* rule(const NetworkConfig& cfg, const std::string& gw, const std::string& key)
{
    for (const auto& r : cfg.derived.rules) {
        if (r.gateway == gw && r.key == key) {
            return &r;
        }
    }
    return nullptr;
}

} // namespace

TEST(Derive, IngressGatewayAggregatesIntoTheTtFlow)
{
    const auto cfg = small();
    const auto* r = rule(cfg, "gw1", "can:37");
    ASSERT_NE(r, nullptr);
    EXPECT_EQ(r->ingress, "cb1");
    EXPECT_EQ(r->action.kind, RouteAction::Kind::ToEthernet);
    EXPECT_EQ(r->action.pool, "gw1_1");
    EXPECT_EQ(r->action.holdup, SimTime::ms(2));
    EXPECT_EQ(r->action.tag.cls, TrafficClass::TT);
    EXPECT_EQ(r->action.tag.id, 102);
    // TT flows travel on a group address per ct id
    ASSERT_LT(r->action.dst, cfg.derived.addresses.size());
    EXPECT_EQ(cfg.derived.addresses[r->action.dst].exits, std::vector<std::string>{"gw2"});
}

TEST(Derive, EgressGatewayRestoresTheCanFrame)
{
    const auto cfg = small();
    bool found = false;
    for (const auto& r : cfg.derived.rules) {
        if (r.gateway == "gw2" && r.action.kind == RouteAction::Kind::ToCan) {
            EXPECT_EQ(r.ingress, "eth:gw1");
            EXPECT_EQ(r.action.bus, "cb2");
            EXPECT_EQ(r.action.can_id, 37);
            found = true;
        }
    }
    EXPECT_TRUE(found);
}

TEST(Derive, TtScheduleCoversEveryHopOfTheFlow)
{
    const auto cfg = small();
    int windows = 0;
    for (const auto& w : cfg.derived.schedule.windows) {
        if (w.ct_id == 102) {
            ++windows;
        }
    }
    EXPECT_EQ(windows, 2); // gw1 -> s1 and s1 -> gw2
    EXPECT_EQ(cfg.derived.schedule.cycle_length, SimTime::ms(1));
    EXPECT_TRUE(cfg.derived.schedule.violations().empty());
}

TEST(Derive, AvbReservationOnTheTalkerPort)
{
    const auto cfg = small();
    bool found = false;
    for (const auto& p : cfg.derived.ports) {
        if (p.device == "en1") {
            // 538 B of wire per 125 us
            EXPECT_EQ(p.idle_slope_a, 538 * 8 * 8000);
            found = true;
        }
    }
    EXPECT_TRUE(found);
}

TEST(ConfigJson, RoundTripIsExactAndDeterministic)
{
    const auto cfg = small();
    const auto text = to_json(cfg);
    EXPECT_EQ(text, to_json(small()));
    Diagnostics d;
    auto back = config_from_json(text, d);
    ASSERT_FALSE(d.has_errors()) << d.format("json");
    derive(back, d);
    ASSERT_FALSE(d.has_errors()) << d.format("json");
    EXPECT_EQ(to_json(back), text);
}

TEST(ConfigJson, MalformedJsonThrows)
{
    Diagnostics d;
    EXPECT_THROW(config_from_json("{\"devices\": [", d), ConfigError);
    EXPECT_THROW(config_from_json("{\"devices\": 3}", d), ConfigError);
}

TEST(Overrides, CommandLineWinsOverInlineIni)
{
    AndlBuilder b;
    b.ini("sim.queueCapacity = 16");
    b.ini("sim.ttTolerance = 2us");
    b.switch_("sw");
    b.node("a");
    b.eth("a", "sw");
    const auto plain = compile_or_throw(b.text());
    EXPECT_EQ(plain.sim.queue_capacity, 16);
    EXPECT_EQ(plain.sim.tt_tolerance, SimTime::us(2));

    andl::CompileOptions o;
    o.overrides = {{"sim.queueCapacity", "32"}};
    const auto over = compile_or_throw(b.text(), o);
    EXPECT_EQ(over.sim.queue_capacity, 32);
    EXPECT_EQ(over.sim.tt_tolerance, SimTime::us(2));
    for (const auto& p : over.derived.ports) {
        EXPECT_EQ(p.queue_capacity, 32);
    }
}

TEST(Overrides, MessageParametersCanBeChanged)
{
    andl::CompileOptions o;
    o.overrides = {{"msg2.period", "250us"}, {"msg2.payload", "100B"}};
    const auto cfg = small(o);
    const auto& m = cfg.messages[*cfg.message_index("msg2")];
    EXPECT_EQ(m.period, SimTime::us(250));
    EXPECT_EQ(m.payload, 100);
}

TEST(Overrides, BadValueIsAnErrorUnknownKeyAWarning)
{
    NetworkConfig cfg = small();
    Diagnostics d;
    apply_override(cfg, "sim.queueCapacity", "lots", d);
    EXPECT_TRUE(d.has_errors());
    Diagnostics d2;
    apply_override(cfg, "nobody.period", "1ms", d2);
    EXPECT_FALSE(d2.has_errors());
    ASSERT_EQ(d2.items().size(), 1u);
    EXPECT_EQ(d2.items()[0].severity, Diagnostic::Severity::Warning);
    EXPECT_TRUE(cfg.applied_overrides.empty() || cfg.applied_overrides.back().first != "nobody.period");
}

TEST(DeviceParams, ParsedIntoTheSpec)
{
    DeviceSpec dev;
    dev.kind = DeviceKind::Gateway;
    Diagnostics d;
    apply_device_param(dev, "drift", "50ppm", d);
    apply_device_param(dev, "processingDelay", "25us", d);
    apply_device_param(dev, "holdUpPolicy", "config1", d);
    EXPECT_FALSE(d.has_errors()) << d.format("x");
    EXPECT_EQ(dev.processing_delay, SimTime::us(25));
    EXPECT_EQ(dev.holdup_policy, HoldupPolicy::Config1);
    apply_device_param(dev, "drift", "fast", d);
    EXPECT_TRUE(d.has_errors());
}
