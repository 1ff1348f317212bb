#pragma once

#include "ivnsim/time.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ivnsim {

struct VectorSeries {
    std::string module_path;
    std::string name;
    std::vector<std::pair<SimTime, double>> points; // timestamps non-decreasing
};

struct ScalarResult {
    std::string module_path;
    std::string name;
    double value = 0.0;
    std::string unit;
};

struct LatencySample {
    std::uint32_t message = 0;
    std::uint32_t sink = 0;
    std::uint32_t origin = 0;
    SimTime creation_time{};
    SimTime arrival_time{};

    [[nodiscard]] SimTime latency() const { return arrival_time - creation_time; }
};

using SeriesId = std::size_t;

/// Vectors and scalars keyed by (module path, name).
///
/// Iteration order is the lexicographic key order, so exports are stable.
class MetricStore {
public:
    SeriesId series(std::string_view module_path, std::string_view name);
    /// Throws InvalidArgument if t precedes the series' last timestamp.
    void append(SeriesId id, SimTime t, double value);

    void set_scalar(std::string_view module_path, std::string_view name, double value, std::string_view unit);
    void add_scalar(std::string_view module_path, std::string_view name, double delta, std::string_view unit);

    [[nodiscard]] const VectorSeries* find_vector(std::string_view module_path, std::string_view name) const;
    [[nodiscard]] const VectorSeries& vector(SeriesId id) const { return series_.at(id); }
    [[nodiscard]] const ScalarResult* find_scalar(std::string_view module_path, std::string_view name) const;

    [[nodiscard]] std::vector<const VectorSeries*> vectors() const;
    [[nodiscard]] std::vector<const ScalarResult*> scalars() const;

    [[nodiscard]] bool empty() const noexcept { return series_.empty() && scalars_.empty(); }

private:
    using Key = std::pair<std::string, std::string>;
    std::vector<VectorSeries> series_;
    std::map<Key, SeriesId> series_index_;
    std::map<Key, ScalarResult> scalars_;
};

/// Wire bits per second of transmissions completed in (t0, t1].
///
/// `tx_bits` holds one point per completed transmission: (completion time,
/// wire bits including all framing overhead). Throws InvalidArgument unless
/// t1 > t0.
double utilized_bandwidth(const VectorSeries& tx_bits, SimTime t0, SimTime t1);

/// Largest absolute difference between consecutive latencies; zero for fewer
/// than two samples.
SimTime jitter(std::span<const SimTime> latencies);

/// Jitter of one (message, sink) stream ordered by arrival. Returns nullopt
/// when the samples come from more than one source device.
std::optional<SimTime> jitter(std::span<const LatencySample> samples);

enum class QueueEvent { Enqueue, Dequeue, Drop };

/// Occupancy tracker behind the QueueLength vectors and drop scalars.
class QueueRecorder {
public:
    QueueRecorder() = default;
    QueueRecorder(MetricStore* store, std::string module_path, std::string queue_name, bool record_vector);

    void record(QueueEvent ev, SimTime now);
    [[nodiscard]] int occupancy() const noexcept { return occupancy_; }
    [[nodiscard]] std::uint64_t drops() const noexcept { return drops_; }
    [[nodiscard]] int peak() const noexcept { return peak_; }

private:
    MetricStore* store_ = nullptr;
    std::string module_;
    std::string queue_;
    std::optional<SeriesId> series_;
    int occupancy_ = 0;
    int peak_ = 0;
    std::uint64_t drops_ = 0;
};

enum class ExportFormat { Csv, Structured };

std::optional<ExportFormat> parse_export_format(std::string_view s);

/// CSV: one `«module».«series».csv` per vector with header `time_ps,value`,
/// plus `scalars.csv` with `module,name,value,unit`. Structured: a single
/// `results.json` with the same content. Returns the files written.
/// Throws IoError.
std::vector<std::filesystem::path> export_metrics(const MetricStore& store, ExportFormat format,
                                                  const std::filesystem::path& dir);

/// Reads an exported result directory: results.json when present, the CSV
/// files otherwise. Throws IoError.
MetricStore load_metrics(const std::filesystem::path& dir);

/// Shortest round-trip text for a metric value; integral values print
/// without a fractional part.
std::string format_value(double v);

/// FNV-1a 64 over the bytes of every given file, in order.
std::uint64_t hash_files(std::span<const std::filesystem::path> files);

} // namespace ivnsim
