#pragma once

#include "ivnsim/can.hpp"
#include "ivnsim/config.hpp"
#include "ivnsim/ethernet.hpp"
#include "ivnsim/gateway.hpp"
#include "ivnsim/kernel.hpp"
#include "ivnsim/metrics.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ivnsim {

struct RunOptions {
    SimTime horizon = SimTime::s(1);
    std::uint64_t seed = 0;
    /// Keep simulating after the horizon (no new releases) until the event
    /// list is empty or sim.drainCap has elapsed.
    bool drain = true;
    /// Bandwidth window; defaults to [0, horizon].
    std::optional<std::pair<SimTime, SimTime>> window;
    /// In-memory departure and credit traces on every port.
    bool keep_traces = false;
    /// Hash of the dispatched event sequence.
    bool trace_events = false;
};

/// Arrival of a message instance at a switch or gateway on its path.
struct StationRecord {
    std::uint32_t message = 0;
    std::uint64_t instance = 0;
    std::uint32_t origin = 0;
    std::uint32_t device = 0;
    SimTime arrival{};
};

struct PoolResidence {
    std::string gateway;
    std::string pool;
    std::uint32_t message = 0;
    std::uint64_t instance = 0;
    SimTime arrival{};
    SimTime flush{};
    SimTime holdup{};
};

struct MessageStats {
    std::string name;
    std::uint64_t released = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0; // copies lost at queues, filters or checks
    std::optional<SimTime> min_latency;
    std::optional<SimTime> max_latency;
    SimTime total_latency{};
};

struct SegmentStats {
    std::string name;
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_received = 0;
    std::uint64_t frames_dropped = 0;
    std::uint64_t bits_sent = 0;
};

struct RunReport {
    RunSummary kernel;
    std::vector<MessageStats> messages;
    std::vector<SegmentStats> segments;
    std::uint64_t unknown_destination = 0;
    std::uint64_t no_route = 0;
    std::uint64_t tt_violations = 0;
    std::uint64_t trace_hash = 0;
};

/// One simulation run over a derived configuration. Owns the kernel, the
/// device runtimes and the metric store.
class Simulation {
public:
    /// Throws InternalConsistency if the configuration was not derived
    /// cleanly.
    Simulation(const NetworkConfig& cfg, RunOptions options);
    ~Simulation();

    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// Runs to the horizon (and drains); may be called once.
    const RunReport& run();

    [[nodiscard]] const NetworkConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] Kernel& kernel() noexcept { return kernel_; }
    [[nodiscard]] const MetricStore& metrics() const noexcept { return metrics_; }
    [[nodiscard]] const RunReport& report() const noexcept { return report_; }

    [[nodiscard]] const std::vector<LatencySample>& samples() const noexcept { return samples_; }
    [[nodiscard]] const std::vector<StationRecord>& stations() const noexcept { return stations_; }
    [[nodiscard]] const std::vector<PoolResidence>& residences() const noexcept { return residences_; }

    [[nodiscard]] const EgressPort* port(std::string_view device, std::string_view peer) const;
    [[nodiscard]] std::vector<const EgressPort*> ports() const;
    [[nodiscard]] const CanBus* bus(std::string_view name) const;
    [[nodiscard]] const PoolTimer* pool(std::string_view gateway, std::string_view pool) const;

    /// Latency samples of one message at one sink, in arrival order.
    [[nodiscard]] std::vector<LatencySample> samples_for(std::string_view message, std::string_view sink) const;

private:
    struct Impl;
    NetworkConfig cfg_;
    RunOptions options_;
    Kernel kernel_;
    MetricStore metrics_;
    RunReport report_;
    std::vector<LatencySample> samples_;
    std::vector<StationRecord> stations_;
    std::vector<PoolResidence> residences_;
    std::unique_ptr<Impl> impl_;
    bool ran_ = false;
};

/// Human-readable run summary: per-segment frame counts and per-message
/// delivery and latency.
std::string format_report(const NetworkConfig& cfg, const RunReport& report);

} // namespace ivnsim
