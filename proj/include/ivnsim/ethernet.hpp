#pragma once

#include "ivnsim/clock.hpp"
#include "ivnsim/frames.hpp"
#include "ivnsim/kernel.hpp"
#include "ivnsim/metrics.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ivnsim {

inline constexpr int kEthMinPayload = 46;
inline constexpr int kEthMaxPayload = 1500;
/// Preamble+SFD (8) + header (14) + FCS (4) + interframe gap (12).
inline constexpr int kEthOverheadBytes = 38;
inline constexpr std::int64_t kEthDefaultRate = 100'000'000;

/// Throws PayloadOutOfRange outside 46..1500 bytes.
std::int64_t eth_wire_bits(int payload_len);
SimTime eth_frame_duration(int payload_len, std::int64_t rate_bps);

enum class TrafficClass : std::uint8_t { TT, RC, AVB_A, AVB_B, BE };
inline constexpr std::size_t kTrafficClassCount = 5;

std::string_view to_string(TrafficClass c) noexcept;
std::optional<TrafficClass> parse_traffic_class(std::string_view s) noexcept;

/// Exactly one traffic-class binding of an Ethernet frame.
struct ClassTag {
    TrafficClass cls = TrafficClass::BE;
    std::int32_t id = 0;       // ct_id (TT), vl_id (RC), stream id (AVB)
    std::int32_t priority = 0; // 802.1Q priority (BE), optional RC priority
    SimTime bag{};             // RC only

    static ClassTag tt(std::int32_t ct_id) { return {TrafficClass::TT, ct_id, 0, {}}; }
    static ClassTag rc(std::int32_t vl_id, SimTime bag, std::int32_t priority = 0)
    {
        return {TrafficClass::RC, vl_id, priority, bag};
    }
    static ClassTag avb(bool class_a, std::int32_t stream)
    {
        return {class_a ? TrafficClass::AVB_A : TrafficClass::AVB_B, stream, 0, {}};
    }
    static ClassTag be(std::int32_t priority) { return {TrafficClass::BE, 0, priority, {}}; }

    friend bool operator==(const ClassTag&, const ClassTag&) = default;
};

std::string describe(const ClassTag& tag);

struct EthFrame {
    std::uint32_t src = 0; // sending device index
    std::uint32_t dst = 0; // address index: unicast device or multicast group
    int payload_len = kEthMinPayload;
    ClassTag tag{};
    SimTime creation_time{};
    std::vector<Carried> carried;
    std::vector<std::uint8_t> aggregate; // encoded CAN records; empty for native frames
    std::uint64_t serial = 0;
};

// ---------------------------------------------------------------------------
// Credit-based shaper

enum class CbsPhase { IdleWaiting, Transmitting, QueueEmpty };

/// Credit in units of 1e-12 bit, so that slope[bit/s] * dt[ps] is exact.
struct CreditState {
    __int128 credit = 0;
    std::int64_t idle_slope = 0;
    std::int64_t send_slope = 0;
    SimTime last_update{};

    static CreditState make(std::int64_t idle_slope, std::int64_t port_rate)
    {
        return CreditState{0, idle_slope, idle_slope - port_rate, SimTime{}};
    }
    [[nodiscard]] double bits() const { return static_cast<double>(credit) / 1e12; }
};

inline constexpr __int128 kCreditScale = 1'000'000'000'000;

/// Advances the credit to `now` assuming `phase` held since last_update.
/// Waiting accrues idle_slope, transmitting accrues send_slope, an empty
/// queue lets negative credit recover to zero and resets positive credit.
CreditState cbs_update(CreditState s, SimTime now, CbsPhase phase);

/// Ticks until a waiting class regains credit >= 0 (zero if already there).
SimTime cbs_time_to_zero(const CreditState& s);

// ---------------------------------------------------------------------------
// Bandwidth allocation gap

struct BagState {
    std::int32_t vl_id = 0;
    SimTime bag{};
    std::optional<SimTime> last_departure;
};

/// Earliest permitted departure for the virtual link at or after `now`.
SimTime bag_gate(const BagState& state, SimTime now);

// ---------------------------------------------------------------------------
// Time-triggered schedule

struct TdmaWindow {
    std::int32_t ct_id = 0;
    std::string link; // directed port "device->peer"
    SimTime offset{};
    SimTime duration{};

    friend bool operator==(const TdmaWindow&, const TdmaWindow&) = default;
};

struct TdmaSchedule {
    SimTime cycle_length{};
    std::vector<TdmaWindow> windows;

    /// Human-readable invariant violations (overlap on a link, window past
    /// the cycle end); empty for a valid schedule.
    [[nodiscard]] std::vector<std::string> violations() const;
    [[nodiscard]] std::vector<TdmaWindow> windows_for(std::string_view link) const;

    friend bool operator==(const TdmaSchedule&, const TdmaSchedule&) = default;
};

std::string port_key(std::string_view device, std::string_view peer);

enum class TtCheck { Accept, Violation };

/// Accepts when `arrival` (modulo the cycle) lies inside one of the ct's
/// windows on `link`, widened by `tolerance` on both sides.
TtCheck tt_receive_check(std::int32_t ct_id, std::string_view link, SimTime arrival, const TdmaSchedule& schedule,
                         SimTime tolerance);

// ---------------------------------------------------------------------------
// Egress port

struct PortConfig {
    std::int64_t rate = kEthDefaultRate;
    int queue_capacity = 512; // frames per class
    /// Order of the classes below TT.
    std::vector<TrafficClass> precedence{TrafficClass::RC, TrafficClass::AVB_A, TrafficClass::AVB_B,
                                         TrafficClass::BE};
    std::int64_t idle_slope_a = 0;
    std::int64_t idle_slope_b = 0;
    SimTime cycle{};
    std::vector<TdmaWindow> windows; // windows of this port only
    Oscillator clock{};
    bool record_queue = true;
    bool record_credit = true;
    bool record_departures = true;
    bool record_tx_bits = true;
    bool keep_trace = false; // in-memory departure and credit traces
};

struct Selection {
    TrafficClass cls = TrafficClass::BE;
    std::int32_t key = 0; // ct_id, vl_id or BE priority

    friend bool operator==(const Selection&, const Selection&) = default;
};

/// One direction of a full-duplex link: per-class queues, shapers, TDMA
/// gating and the transmitter.
class EgressPort {
public:
    using Deliver = std::function<void(EthFrame)>;

    struct CreditPoint {
        SimTime time;
        __int128 credit;
    };
    struct Departure {
        SimTime start;
        SimTime end;
        ClassTag tag;
        __int128 credit_at_start; // AVB only
    };

    EgressPort(Kernel& kernel, MetricStore* metrics, std::string device, std::string peer, PortConfig config,
               Deliver on_complete);

    EgressPort(const EgressPort&) = delete;
    EgressPort& operator=(const EgressPort&) = delete;

    /// Returns false if the frame was dropped (queue full or no TT window /
    /// AVB reservation for it on this port).
    bool enqueue(EthFrame frame);

    /// Transmission selection for an idle link at `now`; nothing while busy.
    [[nodiscard]] std::optional<Selection> select(SimTime now) const;

    [[nodiscard]] bool busy() const noexcept { return busy_; }
    [[nodiscard]] const std::string& device() const noexcept { return device_; }
    [[nodiscard]] const std::string& peer() const noexcept { return peer_; }
    [[nodiscard]] const PortConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] std::uint64_t frames_sent() const noexcept { return frames_sent_; }
    [[nodiscard]] std::uint64_t bits_sent() const noexcept { return bits_sent_; }
    [[nodiscard]] std::uint64_t drops() const noexcept;
    [[nodiscard]] int occupancy(TrafficClass c) const { return recorders_[index(c)].occupancy(); }
    [[nodiscard]] int peak_occupancy(TrafficClass c) const { return recorders_[index(c)].peak(); }

    /// Credit projected to `now` (AVB classes only).
    [[nodiscard]] CreditState credit(TrafficClass avb, SimTime now) const;
    [[nodiscard]] const std::vector<CreditPoint>& credit_trace(TrafficClass avb) const;
    [[nodiscard]] const std::vector<Departure>& departures() const noexcept { return departures_; }

private:
    struct Queued {
        EthFrame frame;
        std::uint64_t order;
    };

    static constexpr std::size_t index(TrafficClass c) noexcept { return static_cast<std::size_t>(c); }
    static constexpr std::size_t avb_index(TrafficClass c) noexcept { return c == TrafficClass::AVB_A ? 0 : 1; }

    struct WindowHit {
        const TdmaWindow* window;
        SimTime start;
        SimTime end;
    };
    [[nodiscard]] std::optional<WindowHit> current_window(SimTime now) const;
    [[nodiscard]] std::optional<WindowHit> next_window(SimTime now) const;

    [[nodiscard]] CbsPhase phase(std::size_t avb) const;
    [[nodiscard]] bool fits(const EthFrame& f, SimTime now, SimTime limit) const;

    void try_start();
    void start(const Selection& s);
    void complete(EthFrame frame);
    void schedule_wake(SimTime t);
    [[nodiscard]] std::optional<SimTime> next_wake(SimTime now) const;

    void advance_credits(SimTime now);
    void note_credit(std::size_t avb, SimTime now);
    void push_credit_point(std::size_t avb, SimTime t, __int128 credit);

    Kernel& kernel_;
    MetricStore* metrics_;
    ModuleId module_;
    std::string device_;
    std::string peer_;
    PortConfig cfg_;
    Deliver on_complete_;

    std::map<std::int32_t, std::deque<Queued>> tt_;
    std::map<std::int32_t, std::deque<Queued>> rc_;
    std::map<std::int32_t, BagState> bag_;
    std::array<std::deque<Queued>, 2> avb_;
    std::array<std::deque<Queued>, 8> be_;
    std::array<QueueRecorder, kTrafficClassCount> recorders_;
    std::uint64_t order_ = 0;

    std::array<CreditState, 2> credit_{};
    std::array<std::optional<CbsPhase>, 2> recorded_phase_{};
    std::array<std::vector<CreditPoint>, 2> credit_trace_{};
    std::array<std::optional<SeriesId>, 2> credit_series_{};

    bool busy_ = false;
    std::optional<TrafficClass> tx_class_;
    bool wake_pending_ = false;
    SimTime wake_time_{};
    EventHandle wake_;

    std::uint64_t frames_sent_ = 0;
    std::uint64_t bits_sent_ = 0;
    std::uint64_t rejected_ = 0;
    std::optional<SeriesId> tx_bits_series_;
    std::optional<SeriesId> departure_series_[kTrafficClassCount];
    std::vector<Departure> departures_;
};

} // namespace ivnsim
