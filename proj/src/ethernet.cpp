#include "ivnsim/ethernet.hpp"

#include "ivnsim/error.hpp"

#include <algorithm>
#include <tuple>

namespace ivnsim {

std::int64_t eth_wire_bits(int payload_len)
{
    if (payload_len < kEthMinPayload || payload_len > kEthMaxPayload) {
        throw PayloadOutOfRange("Ethernet payload must be 46..1500 bytes, got " + std::to_string(payload_len));
    }
    return 8LL * (kEthOverheadBytes + payload_len);
}

SimTime eth_frame_duration(int payload_len, std::int64_t rate_bps)
{
    return transmission_time(eth_wire_bits(payload_len), rate_bps);
}

std::string_view to_string(TrafficClass c) noexcept
{
    switch (c) {
    case TrafficClass::TT: return "TT";
    case TrafficClass::RC: return "RC";
    case TrafficClass::AVB_A: return "AVB_A";
    case TrafficClass::AVB_B: return "AVB_B";
    case TrafficClass::BE: return "BE";
    }
    return "?";
}

std::optional<TrafficClass> parse_traffic_class(std::string_view s) noexcept
{
    for (auto c : {TrafficClass::TT, TrafficClass::RC, TrafficClass::AVB_A, TrafficClass::AVB_B, TrafficClass::BE}) {
        if (s == to_string(c)) {
            return c;
        }
    }
    return std::nullopt;
}

std::string describe(const ClassTag& tag)
{
    switch (tag.cls) {
    case TrafficClass::TT: return "tt{ctID " + std::to_string(tag.id) + "}";
    case TrafficClass::RC:
        return "rc{vlID " + std::to_string(tag.id) + "; bag " + format_time(tag.bag) + "}";
    case TrafficClass::AVB_A: return "avb{id " + std::to_string(tag.id) + "; class A}";
    case TrafficClass::AVB_B: return "avb{id " + std::to_string(tag.id) + "; class B}";
    case TrafficClass::BE: return "be{priority " + std::to_string(tag.priority) + "}";
    }
    return "?";
}

// ---------------------------------------------------------------------------

CreditState cbs_update(CreditState s, SimTime now, CbsPhase phase)
{
    if (now < s.last_update) {
        throw InvalidArgument("cbs_update: time moved backwards");
    }
    const __int128 dt = (now - s.last_update).ticks();
    switch (phase) {
    case CbsPhase::IdleWaiting:
        s.credit += static_cast<__int128>(s.idle_slope) * dt;
        break;
    case CbsPhase::Transmitting:
        s.credit += static_cast<__int128>(s.send_slope) * dt;
        break;
    case CbsPhase::QueueEmpty:
        if (s.credit < 0) {
            s.credit = std::min<__int128>(0, s.credit + static_cast<__int128>(s.idle_slope) * dt);
        } else {
            s.credit = 0;
        }
        break;
    }
    s.last_update = now;
    return s;
}

SimTime cbs_time_to_zero(const CreditState& s)
{
    if (s.credit >= 0) {
        return SimTime::zero();
    }
    if (s.idle_slope <= 0) {
        return SimTime::max();
    }
    const __int128 need = -s.credit;
    const __int128 ticks = (need + s.idle_slope - 1) / s.idle_slope;
    return SimTime::from_ticks(static_cast<std::int64_t>(ticks));
}

SimTime bag_gate(const BagState& state, SimTime now)
{
    if (!state.last_departure) {
        return now;
    }
    const SimTime open = *state.last_departure + state.bag;
    return now >= open ? now : open;
}

// ---------------------------------------------------------------------------

std::string port_key(std::string_view device, std::string_view peer)
{
    std::string k(device);
    k += "->";
    k += peer;
    return k;
}

std::vector<std::string> TdmaSchedule::violations() const
{
    std::vector<std::string> out;
    if (windows.empty()) {
        return out;
    }
    if (cycle_length <= SimTime::zero()) {
        out.push_back("cycle length must be positive");
        return out;
    }
    std::map<std::string, std::vector<const TdmaWindow*>> by_link;
    for (const auto& w : windows) {
        if (w.offset < SimTime::zero() || w.duration <= SimTime::zero()) {
            out.push_back("window of ct " + std::to_string(w.ct_id) + " on " + w.link + " has invalid bounds");
        }
        if (w.offset + w.duration > cycle_length) {
            out.push_back("window of ct " + std::to_string(w.ct_id) + " on " + w.link + " exceeds the cycle");
        }
        by_link[w.link].push_back(&w);
    }
    for (auto& [link, ws] : by_link) {
        std::sort(ws.begin(), ws.end(), [](auto* a, auto* b) { return a->offset < b->offset; });
        for (std::size_t i = 1; i < ws.size(); ++i) {
            if (ws[i - 1]->offset + ws[i - 1]->duration > ws[i]->offset) {
                out.push_back("windows of ct " + std::to_string(ws[i - 1]->ct_id) + " and ct " +
                              std::to_string(ws[i]->ct_id) + " overlap on " + link);
            }
        }
    }
    return out;
}

std::vector<TdmaWindow> TdmaSchedule::windows_for(std::string_view link) const
{
    std::vector<TdmaWindow> out;
    for (const auto& w : windows) {
        if (w.link == link) {
            out.push_back(w);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.offset < b.offset; });
    return out;
}

TtCheck tt_receive_check(std::int32_t ct_id, std::string_view link, SimTime arrival, const TdmaSchedule& schedule,
                         SimTime tolerance)
{
    const std::int64_t cycle = schedule.cycle_length.ticks();
    if (cycle <= 0) {
        return TtCheck::Violation;
    }
    std::int64_t phase = arrival.ticks() % cycle;
    if (phase < 0) {
        phase += cycle;
    }
    for (const auto& w : schedule.windows) {
        if (w.ct_id != ct_id || w.link != link) {
            continue;
        }
        const std::int64_t lo = w.offset.ticks() - tolerance.ticks();
        const std::int64_t hi = w.offset.ticks() + w.duration.ticks() + tolerance.ticks();
        for (std::int64_t p : {phase - cycle, phase, phase + cycle}) {
            if (p >= lo && p <= hi) {
                return TtCheck::Accept;
            }
        }
    }
    return TtCheck::Violation;
}

// ---------------------------------------------------------------------------

EgressPort::EgressPort(Kernel& kernel, MetricStore* metrics, std::string device, std::string peer, PortConfig config,
                       Deliver on_complete)
    : kernel_(kernel),
      metrics_(metrics),
      module_(kernel.register_module(device + ".eth[" + peer + "]")),
      device_(std::move(device)),
      peer_(std::move(peer)),
      cfg_(std::move(config)),
      on_complete_(std::move(on_complete))
{
    if (cfg_.rate <= 0) {
        throw InvalidArgument("port rate must be positive");
    }
    std::sort(cfg_.windows.begin(), cfg_.windows.end(),
              [](const auto& a, const auto& b) { return a.offset < b.offset; });
    if (!cfg_.windows.empty() && cfg_.cycle <= SimTime::zero()) {
        throw InvalidArgument("TT windows require a positive cycle length");
    }
    for (auto c : {TrafficClass::TT, TrafficClass::RC, TrafficClass::AVB_A, TrafficClass::AVB_B, TrafficClass::BE}) {
        recorders_[index(c)] =
            QueueRecorder(metrics_, device_, peer_ + "," + std::string(to_string(c)), cfg_.record_queue);
    }
    credit_[0] = CreditState::make(cfg_.idle_slope_a, cfg_.rate);
    credit_[1] = CreditState::make(cfg_.idle_slope_b, cfg_.rate);
    if (metrics_) {
        if (cfg_.record_credit) {
            if (cfg_.idle_slope_a > 0) {
                credit_series_[0] = metrics_->series(device_, "credit[" + peer_ + ",A]");
            }
            if (cfg_.idle_slope_b > 0) {
                credit_series_[1] = metrics_->series(device_, "credit[" + peer_ + ",B]");
            }
        }
        if (cfg_.record_tx_bits) {
            tx_bits_series_ = metrics_->series(device_, "txBits[" + peer_ + "]");
        }
    }
}

std::uint64_t EgressPort::drops() const noexcept
{
    std::uint64_t n = 0;
    for (const auto& r : recorders_) {
        n += r.drops();
    }
    return n;
}

CreditState EgressPort::credit(TrafficClass avb, SimTime now) const
{
    const std::size_t i = avb_index(avb);
    return cbs_update(credit_[i], std::max(now, credit_[i].last_update), phase(i));
}

const std::vector<EgressPort::CreditPoint>& EgressPort::credit_trace(TrafficClass avb) const
{
    return credit_trace_[avb_index(avb)];
}

std::optional<EgressPort::WindowHit> EgressPort::current_window(SimTime now) const
{
    if (cfg_.windows.empty()) {
        return std::nullopt;
    }
    const SimTime local = cfg_.clock.ideal_to_local(now);
    if (local < SimTime::zero()) {
        return std::nullopt;
    }
    const std::int64_t c = cfg_.cycle.ticks();
    const std::int64_t base = local.ticks() / c * c;
    for (const auto& w : cfg_.windows) {
        const SimTime ls = SimTime::from_ticks(base) + w.offset;
        const SimTime start = cfg_.clock.local_to_ideal(ls);
        const SimTime end = cfg_.clock.local_to_ideal(ls + w.duration);
        if (start <= now && now < end) {
            return WindowHit{&w, start, end};
        }
    }
    return std::nullopt;
}

std::optional<EgressPort::WindowHit> EgressPort::next_window(SimTime now) const
{
    if (cfg_.windows.empty()) {
        return std::nullopt;
    }
    const SimTime local = std::max(SimTime::zero(), cfg_.clock.ideal_to_local(now));
    const std::int64_t c = cfg_.cycle.ticks();
    const std::int64_t base = local.ticks() / c * c;
    for (std::int64_t k = 0; k < 3; ++k) {
        for (const auto& w : cfg_.windows) {
            const SimTime ls = SimTime::from_ticks(base + k * c) + w.offset;
            const SimTime start = cfg_.clock.local_to_ideal(ls);
            if (start >= now) {
                return WindowHit{&w, start, cfg_.clock.local_to_ideal(ls + w.duration)};
            }
        }
    }
    return std::nullopt;
}

CbsPhase EgressPort::phase(std::size_t avb) const
{
    const TrafficClass cls = avb == 0 ? TrafficClass::AVB_A : TrafficClass::AVB_B;
    if (busy_ && tx_class_ == cls) {
        return CbsPhase::Transmitting;
    }
    return avb_[avb].empty() ? CbsPhase::QueueEmpty : CbsPhase::IdleWaiting;
}

bool EgressPort::fits(const EthFrame& f, SimTime now, SimTime limit) const
{
    if (limit == SimTime::max()) {
        return true;
    }
    return now + eth_frame_duration(f.payload_len, cfg_.rate) <= limit;
}

std::optional<Selection> EgressPort::select(SimTime now) const
{
    if (busy_) {
        return std::nullopt;
    }
    if (auto cw = current_window(now)) {
        auto it = tt_.find(cw->window->ct_id);
        // TT frames are gated on their start time only.
        if (it != tt_.end() && !it->second.empty()) {
            return Selection{TrafficClass::TT, cw->window->ct_id};
        }
        // The rest of a TT window stays reserved.
        return std::nullopt;
    }
    SimTime limit = SimTime::max();
    if (auto nw = next_window(now)) {
        limit = nw->start;
    }
    for (TrafficClass cls : cfg_.precedence) {
        switch (cls) {
        case TrafficClass::TT:
            break;
        case TrafficClass::RC: {
            std::optional<Selection> best;
            std::tuple<std::int32_t, std::uint64_t, std::int32_t> best_key{};
            for (const auto& [vl, q] : rc_) {
                if (q.empty()) {
                    continue;
                }
                if (bag_gate(bag_.at(vl), now) > now || !fits(q.front().frame, now, limit)) {
                    continue;
                }
                auto key = std::tuple{-q.front().frame.tag.priority, q.front().order, vl};
                if (!best || key < best_key) {
                    best = Selection{TrafficClass::RC, vl};
                    best_key = key;
                }
            }
            if (best) {
                return best;
            }
            break;
        }
        case TrafficClass::AVB_A:
        case TrafficClass::AVB_B: {
            const std::size_t i = avb_index(cls);
            if (avb_[i].empty()) {
                break;
            }
            if (credit(cls, now).credit < 0 || !fits(avb_[i].front().frame, now, limit)) {
                break;
            }
            return Selection{cls, avb_[i].front().frame.tag.id};
        }
        case TrafficClass::BE:
            for (int p = 7; p >= 0; --p) {
                const auto& q = be_[static_cast<std::size_t>(p)];
                if (!q.empty() && fits(q.front().frame, now, limit)) {
                    return Selection{TrafficClass::BE, p};
                }
            }
            break;
        }
    }
    return std::nullopt;
}

bool EgressPort::enqueue(EthFrame frame)
{
    const SimTime now = kernel_.now();
    advance_credits(now);
    const TrafficClass cls = frame.tag.cls;
    auto& rec = recorders_[index(cls)];
    bool reject = rec.occupancy() >= cfg_.queue_capacity;
    if (cls == TrafficClass::TT) {
        const bool has_window = std::any_of(cfg_.windows.begin(), cfg_.windows.end(),
                                            [&](const auto& w) { return w.ct_id == frame.tag.id; });
        reject = reject || !has_window;
    } else if (cls == TrafficClass::AVB_A || cls == TrafficClass::AVB_B) {
        reject = reject || credit_[avb_index(cls)].idle_slope <= 0;
    } else if (cls == TrafficClass::BE) {
        frame.tag.priority = std::clamp(frame.tag.priority, 0, 7);
    }
    if (reject) {
        rec.record(QueueEvent::Drop, now);
        ++rejected_;
        return false;
    }
    Queued q{std::move(frame), order_++};
    switch (cls) {
    case TrafficClass::TT: tt_[q.frame.tag.id].push_back(std::move(q)); break;
    case TrafficClass::RC: {
        const auto vl = q.frame.tag.id;
        auto [it, inserted] = bag_.try_emplace(vl, BagState{vl, q.frame.tag.bag, std::nullopt});
        it->second.bag = q.frame.tag.bag;
        rc_[vl].push_back(std::move(q));
        break;
    }
    case TrafficClass::AVB_A:
    case TrafficClass::AVB_B: avb_[avb_index(cls)].push_back(std::move(q)); break;
    case TrafficClass::BE: be_[static_cast<std::size_t>(q.frame.tag.priority)].push_back(std::move(q)); break;
    }
    rec.record(QueueEvent::Enqueue, now);
    if (cls == TrafficClass::AVB_A || cls == TrafficClass::AVB_B) {
        note_credit(avb_index(cls), now);
    }
    try_start();
    return true;
}

void EgressPort::try_start()
{
    if (busy_) {
        return;
    }
    const SimTime now = kernel_.now();
    advance_credits(now);
    if (auto sel = select(now)) {
        start(*sel);
        return;
    }
    if (auto t = next_wake(now)) {
        schedule_wake(*t);
    }
}

void EgressPort::start(const Selection& s)
{
    const SimTime now = kernel_.now();
    std::deque<Queued>* q = nullptr;
    switch (s.cls) {
    case TrafficClass::TT: q = &tt_.at(s.key); break;
    case TrafficClass::RC: q = &rc_.at(s.key); break;
    case TrafficClass::AVB_A:
    case TrafficClass::AVB_B: q = &avb_[avb_index(s.cls)]; break;
    case TrafficClass::BE: q = &be_[static_cast<std::size_t>(s.key)]; break;
    }
    EthFrame frame = std::move(q->front().frame);
    q->pop_front();
    recorders_[index(s.cls)].record(QueueEvent::Dequeue, now);
    if (s.cls == TrafficClass::RC) {
        bag_.at(s.key).last_departure = now;
    }

    const SimTime end = now + eth_frame_duration(frame.payload_len, cfg_.rate);
    busy_ = true;
    tx_class_ = s.cls;
    __int128 credit_at_start = 0;
    if (s.cls == TrafficClass::AVB_A || s.cls == TrafficClass::AVB_B) {
        const std::size_t i = avb_index(s.cls);
        credit_at_start = credit_[i].credit;
        note_credit(i, now);
    }
    if (metrics_ && cfg_.record_departures) {
        auto& sid = departure_series_[index(s.cls)];
        if (!sid) {
            sid = metrics_->series(device_, "departure[" + peer_ + "," + std::string(to_string(s.cls)) + "]");
        }
        const double v = s.cls == TrafficClass::BE ? frame.tag.priority : frame.tag.id;
        metrics_->append(*sid, now, v);
    }
    if (cfg_.keep_trace) {
        departures_.push_back(Departure{now, end, frame.tag, credit_at_start});
    }
    kernel_.schedule(end, module_, EventKind::TxComplete,
                     [this, f = std::move(frame)]() mutable { complete(std::move(f)); });
}

void EgressPort::complete(EthFrame frame)
{
    const SimTime now = kernel_.now();
    advance_credits(now);
    busy_ = false;
    tx_class_.reset();
    note_credit(0, now);
    note_credit(1, now);
    const auto bits = eth_wire_bits(frame.payload_len);
    ++frames_sent_;
    bits_sent_ += static_cast<std::uint64_t>(bits);
    if (metrics_ && tx_bits_series_) {
        metrics_->append(*tx_bits_series_, now, static_cast<double>(bits));
    }
    on_complete_(std::move(frame));
    try_start();
}

std::optional<SimTime> EgressPort::next_wake(SimTime now) const
{
    bool any = !avb_[0].empty() || !avb_[1].empty();
    for (const auto& [k, q] : tt_) {
        any = any || !q.empty();
    }
    for (const auto& [k, q] : rc_) {
        any = any || !q.empty();
    }
    for (const auto& q : be_) {
        any = any || !q.empty();
    }
    if (!any) {
        return std::nullopt;
    }
    std::optional<SimTime> best;
    auto consider = [&](SimTime t) {
        if (t > now && (!best || t < *best)) {
            best = t;
        }
    };
    if (auto cw = current_window(now)) {
        consider(cw->end);
    } else if (auto nw = next_window(now)) {
        consider(nw->start);
        consider(nw->end);
    }
    for (const auto& [vl, q] : rc_) {
        if (!q.empty()) {
            consider(bag_gate(bag_.at(vl), now));
        }
    }
    for (std::size_t i = 0; i < 2; ++i) {
        if (avb_[i].empty()) {
            continue;
        }
        const auto projected = credit(i == 0 ? TrafficClass::AVB_A : TrafficClass::AVB_B, now);
        if (projected.credit < 0) {
            const SimTime wait = cbs_time_to_zero(projected);
            if (wait != SimTime::max()) {
                consider(now + wait);
            }
        }
    }
    return best;
}

void EgressPort::schedule_wake(SimTime t)
{
    if (wake_pending_ && wake_time_ <= t) {
        return;
    }
    if (wake_pending_) {
        kernel_.cancel(wake_);
    }
    wake_pending_ = true;
    wake_time_ = t;
    wake_ = kernel_.schedule(t, module_, EventKind::Wake, [this] {
        wake_pending_ = false;
        try_start();
    });
}

void EgressPort::advance_credits(SimTime now)
{
    for (std::size_t i = 0; i < 2; ++i) {
        auto& s = credit_[i];
        if (s.idle_slope <= 0 || now <= s.last_update) {
            continue;
        }
        const CbsPhase ph = phase(i);
        std::optional<SimTime> zero_at;
        __int128 reached = 0;
        if (ph == CbsPhase::QueueEmpty && s.credit < 0) {
            const SimTime t0 = s.last_update + cbs_time_to_zero(s);
            if (t0 <= now) {
                zero_at = t0;
                // the crossing is rounded up to the picosecond grid
                reached = s.credit + static_cast<__int128>(s.idle_slope) * (t0 - s.last_update).ticks();
            }
        }
        s = cbs_update(s, now, ph);
        if (zero_at) {
            push_credit_point(i, *zero_at, reached);
            push_credit_point(i, *zero_at, 0);
        }
    }
}

void EgressPort::note_credit(std::size_t i, SimTime now)
{
    auto& s = credit_[i];
    if (s.idle_slope <= 0) {
        return;
    }
    const CbsPhase ph = phase(i);
    bool changed = !recorded_phase_[i] || *recorded_phase_[i] != ph;
    if (ph == CbsPhase::QueueEmpty && s.credit > 0) {
        push_credit_point(i, now, s.credit);
        s.credit = 0;
        changed = true;
    }
    if (changed) {
        push_credit_point(i, now, s.credit);
        recorded_phase_[i] = ph;
    }
}

void EgressPort::push_credit_point(std::size_t i, SimTime t, __int128 credit)
{
    auto& trace = credit_trace_[i];
    if (cfg_.keep_trace) {
        if (trace.empty() || trace.back().time != t || trace.back().credit != credit) {
            trace.push_back(CreditPoint{t, credit});
        }
    }
    if (metrics_ && credit_series_[i]) {
        metrics_->append(*credit_series_[i], t, static_cast<double>(credit) / 1e12);
    }
}

} // namespace ivnsim
