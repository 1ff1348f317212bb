#include "ivnsim/can.hpp"

#include "ivnsim/error.hpp"

#include <tuple>

namespace ivnsim {

int can_frame_bits(int payload_len, bool stuffing)
{
    if (payload_len < 0 || payload_len > kCanMaxPayload) {
        throw InvalidArgument("CAN payload must be 0..8 bytes, got " + std::to_string(payload_len));
    }
    int bits = kCanOverheadBits + 8 * payload_len;
    if (stuffing) {
        bits += (34 + 8 * payload_len) / 4;
    }
    return bits;
}

SimTime can_frame_duration(int payload_len, std::int64_t bitrate, bool stuffing)
{
    return transmission_time(can_frame_bits(payload_len, stuffing), bitrate);
}

std::optional<std::size_t> arbitrate(std::span<const CanContender> pending)
{
    if (pending.empty()) {
        return std::nullopt;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < pending.size(); ++i) {
        const auto& a = pending[i];
        const auto& b = pending[best];
        if (std::tie(a.id, a.node, a.order) < std::tie(b.id, b.node, b.order)) {
            best = i;
        }
    }
    return best;
}

CanBus::CanBus(Kernel& kernel, MetricStore* metrics, std::string name, std::int64_t bitrate, bool stuffing,
               bool record_tx_bits)
    : kernel_(kernel),
      metrics_(metrics),
      module_(kernel.register_module(name)),
      name_(std::move(name)),
      bitrate_(bitrate),
      stuffing_(stuffing)
{
    if (bitrate_ <= 0) {
        throw InvalidArgument("CAN bitrate must be positive");
    }
    if (metrics_ && record_tx_bits) {
        tx_bits_series_ = metrics_->series(name_, "txBits");
    }
}

std::uint32_t CanBus::attach(std::string node, Receiver on_receive, CanTxBufferMode mode)
{
    ports_.push_back(Port{std::move(node), std::move(on_receive), mode, {}, {}});
    return static_cast<std::uint32_t>(ports_.size() - 1);
}

void CanBus::add_filter(std::uint32_t port, std::uint16_t id)
{
    ports_.at(port).filter.insert(id);
}

std::size_t CanBus::queued() const noexcept
{
    std::size_t n = 0;
    for (const auto& p : ports_) {
        n += p.pending.size();
    }
    return n;
}

void CanBus::submit(std::uint32_t port, CanFrame frame)
{
    if (frame.id > kCanMaxId) {
        throw InvalidArgument("CAN id exceeds 11 bits");
    }
    if (frame.payload_len > kCanMaxPayload) {
        throw InvalidArgument("CAN payload exceeds 8 bytes");
    }
    auto& p = ports_.at(port);
    if (p.mode == CanTxBufferMode::Overwrite) {
        auto it = p.pending.lower_bound({frame.id, 0});
        if (it != p.pending.end() && it->first.first == frame.id) {
            if (overwrite_cb_) {
                overwrite_cb_(it->second);
            }
            p.pending.erase(it);
            ++overwritten_;
            if (metrics_) {
                metrics_->add_scalar(p.node, "canOverwrite[" + name_ + "]", 1.0, "frames");
            }
        }
    }
    p.pending.emplace(std::pair{frame.id, order_++}, frame);
    request_arbitration();
}

void CanBus::request_arbitration()
{
    if (transmitting_ || arbitration_pending_) {
        return;
    }
    arbitration_pending_ = true;
    // Deferred to the end of the current instant so that every frame
    // released at this tick takes part.
    kernel_.schedule(kernel_.now(), module_, EventKind::Arbitrate, [this] {
        arbitration_pending_ = false;
        arbitrate_now();
    });
}

void CanBus::arbitrate_now()
{
    if (transmitting_) {
        return;
    }
    std::vector<CanContender> heads;
    heads.reserve(ports_.size());
    for (std::uint32_t i = 0; i < ports_.size(); ++i) {
        const auto& p = ports_[i];
        if (!p.pending.empty()) {
            const auto& key = p.pending.begin()->first;
            heads.push_back(CanContender{key.first, i, key.second});
        }
    }
    auto win = arbitrate(heads);
    if (!win) {
        return;
    }
    const std::uint32_t sender = heads[*win].node;
    auto& port = ports_[sender];
    CanFrame frame = port.pending.begin()->second;
    port.pending.erase(port.pending.begin());

    const SimTime now = kernel_.now();
    const SimTime duration = can_frame_duration(frame.payload_len, bitrate_, stuffing_);
    transmitting_ = true;
    busy_until_ = now + duration;
    if (tx_start_cb_) {
        tx_start_cb_(frame, sender, now, busy_until_);
    }
    kernel_.schedule(busy_until_, module_, EventKind::TxComplete,
                     [this, frame, sender] { complete(frame, sender); });
}

void CanBus::complete(CanFrame frame, std::uint32_t sender)
{
    const SimTime now = kernel_.now();
    transmitting_ = false;
    const int bits = can_frame_bits(frame.payload_len, stuffing_);
    ++frames_sent_;
    bits_sent_ += static_cast<std::uint64_t>(bits);
    if (metrics_ && tx_bits_series_) {
        metrics_->append(*tx_bits_series_, now, bits);
    }
    for (std::uint32_t i = 0; i < ports_.size(); ++i) {
        if (i == sender) {
            continue;
        }
        auto& p = ports_[i];
        if (p.on_receive && p.filter.count(frame.id) != 0) {
            ++frames_delivered_;
            p.on_receive(frame);
        }
    }
    request_arbitration();
}

} // namespace ivnsim
