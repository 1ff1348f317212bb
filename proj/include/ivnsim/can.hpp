#pragma once

#include "ivnsim/frames.hpp"
#include "ivnsim/kernel.hpp"
#include "ivnsim/metrics.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ivnsim {

/// Standard 11-bit frame overhead: SOF, arbitration, control, CRC, ACK,
/// EOF and the 3-bit interframe space.
inline constexpr int kCanOverheadBits = 47;
inline constexpr std::int64_t kCanDefaultBitrate = 500'000;

/// Wire bits of a standard frame; with `stuffing`, adds the worst-case
/// floor((34 + 8n) / 4) stuff bits.
int can_frame_bits(int payload_len, bool stuffing = false);
SimTime can_frame_duration(int payload_len, std::int64_t bitrate, bool stuffing = false);

/// One frame competing for the bus.
struct CanContender {
    std::uint16_t id = 0;
    std::uint32_t node = 0;    // attachment index on the bus
    std::uint64_t order = 0;   // enqueue order within the node
};

/// Index of the winner: smallest id, then lowest node index, then FIFO.
std::optional<std::size_t> arbitrate(std::span<const CanContender> pending);

enum class CanTxBufferMode {
    Fifo,      // every queued frame is kept
    Overwrite, // one message object per id; a newer frame replaces the queued one
};

/// Shared CAN bus with priority arbitration and non-preemptive transmission.
class CanBus {
public:
    using Receiver = std::function<void(const CanFrame&)>;

    CanBus(Kernel& kernel, MetricStore* metrics, std::string name, std::int64_t bitrate,
           bool stuffing = false, bool record_tx_bits = true);

    CanBus(const CanBus&) = delete;
    CanBus& operator=(const CanBus&) = delete;

    /// Returns the attachment index. Frames whose id is in `filter` are handed
    /// to `on_receive`; an empty receiver attaches a transmit-only port.
    std::uint32_t attach(std::string node, Receiver on_receive, CanTxBufferMode mode = CanTxBufferMode::Fifo);
    void add_filter(std::uint32_t port, std::uint16_t id);

    /// Queues a frame at the given attachment and arbitrates when idle.
    void submit(std::uint32_t port, CanFrame frame);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] std::int64_t bitrate() const noexcept { return bitrate_; }
    [[nodiscard]] bool busy(SimTime now) const noexcept { return now < busy_until_; }
    [[nodiscard]] SimTime busy_until() const noexcept { return busy_until_; }
    [[nodiscard]] std::uint64_t frames_sent() const noexcept { return frames_sent_; }
    [[nodiscard]] std::uint64_t frames_delivered() const noexcept { return frames_delivered_; }
    [[nodiscard]] std::uint64_t frames_overwritten() const noexcept { return overwritten_; }
    [[nodiscard]] std::uint64_t bits_sent() const noexcept { return bits_sent_; }
    [[nodiscard]] std::size_t queued() const noexcept;

    /// Observer called when a frame starts transmission.
    void on_tx_start(std::function<void(const CanFrame&, std::uint32_t port, SimTime start, SimTime end)> cb)
    {
        tx_start_cb_ = std::move(cb);
    }

    /// Observer called when an Overwrite buffer discards a queued frame.
    void on_overwrite(std::function<void(const CanFrame& discarded)> cb) { overwrite_cb_ = std::move(cb); }

private:
    struct Port {
        std::string node;
        Receiver on_receive;
        CanTxBufferMode mode = CanTxBufferMode::Fifo;
        std::set<std::uint16_t> filter;
        // keyed by (id, enqueue order)
        std::map<std::pair<std::uint16_t, std::uint64_t>, CanFrame> pending;
    };

    void request_arbitration();
    void arbitrate_now();
    void complete(CanFrame frame, std::uint32_t sender);

    Kernel& kernel_;
    MetricStore* metrics_;
    ModuleId module_;
    std::string name_;
    std::int64_t bitrate_;
    bool stuffing_;
    std::vector<Port> ports_;
    SimTime busy_until_{};
    bool transmitting_ = false;
    bool arbitration_pending_ = false;
    std::uint64_t order_ = 0;
    std::uint64_t frames_sent_ = 0;
    std::uint64_t frames_delivered_ = 0;
    std::uint64_t overwritten_ = 0;
    std::uint64_t bits_sent_ = 0;
    std::optional<SeriesId> tx_bits_series_;
    std::function<void(const CanFrame&, std::uint32_t, SimTime, SimTime)> tx_start_cb_;
    std::function<void(const CanFrame&)> overwrite_cb_;
};

} // namespace ivnsim
