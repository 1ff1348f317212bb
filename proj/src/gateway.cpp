#include "ivnsim/gateway.hpp"

#include "ivnsim/error.hpp"

#include <algorithm>
#include <tuple>

namespace ivnsim {

int aggregate_size(std::span<const CanRecord> records)
{
    int n = kAggregateHeaderBytes;
    for (const auto& r : records) {
        n += record_size(r);
    }
    return n;
}

namespace {

std::vector<std::uint8_t> encode_one(std::span<const CanRecord> records)
{
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(std::max(aggregate_size(records), kEthMinPayload)));
    const auto count = static_cast<std::uint16_t>(records.size());
    out.push_back(static_cast<std::uint8_t>(count >> 8));
    out.push_back(static_cast<std::uint8_t>(count & 0xFF));
    for (const auto& r : records) {
        if (r.dlc > kCanMaxPayload) {
            throw InvalidArgument("CAN record dlc exceeds 8");
        }
        out.push_back(static_cast<std::uint8_t>(r.id >> 8));
        out.push_back(static_cast<std::uint8_t>(r.id & 0xFF));
        out.push_back(r.dlc);
        out.insert(out.end(), r.data.begin(), r.data.begin() + r.dlc);
    }
    if (out.size() < static_cast<std::size_t>(kEthMinPayload)) {
        out.resize(kEthMinPayload, 0);
    }
    return out;
}

} // namespace

std::vector<std::vector<std::uint8_t>> encode_aggregate(std::span<const CanRecord> records)
{
    std::vector<std::vector<std::uint8_t>> out;
    std::size_t begin = 0;
    while (begin < records.size()) {
        int size = kAggregateHeaderBytes;
        std::size_t end = begin;
        while (end < records.size() && size + record_size(records[end]) <= kEthMaxPayload) {
            size += record_size(records[end]);
            ++end;
        }
        out.push_back(encode_one(records.subspan(begin, end - begin)));
        begin = end;
    }
    return out;
}

std::vector<CanRecord> decode_aggregate(std::span<const std::uint8_t> payload)
{
    if (payload.size() < static_cast<std::size_t>(kAggregateHeaderBytes)) {
        throw MalformedAggregate("aggregate shorter than its count prefix");
    }
    const std::size_t count = (static_cast<std::size_t>(payload[0]) << 8) | payload[1];
    std::vector<CanRecord> out;
    out.reserve(count);
    std::size_t pos = kAggregateHeaderBytes;
    for (std::size_t i = 0; i < count; ++i) {
        if (pos + kRecordHeaderBytes > payload.size()) {
            throw MalformedAggregate("truncated record header");
        }
        CanRecord r;
        r.id = static_cast<std::uint16_t>((payload[pos] << 8) | payload[pos + 1]);
        r.dlc = payload[pos + 2];
        if (r.id > kCanMaxId) {
            throw MalformedAggregate("record id exceeds 11 bits");
        }
        if (r.dlc > kCanMaxPayload) {
            throw MalformedAggregate("record dlc exceeds 8");
        }
        pos += kRecordHeaderBytes;
        if (pos + r.dlc > payload.size()) {
            throw MalformedAggregate("truncated record payload");
        }
        std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(pos), r.dlc, r.data.begin());
        pos += r.dlc;
        out.push_back(r);
    }
    if (pos != payload.size()) {
        if (payload.size() > static_cast<std::size_t>(kEthMinPayload)) {
            throw MalformedAggregate("records do not tile the payload");
        }
        if (std::any_of(payload.begin() + static_cast<std::ptrdiff_t>(pos), payload.end(),
                        [](std::uint8_t b) { return b != 0; })) {
            throw MalformedAggregate("non-zero padding");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(HoldupPolicy p) noexcept
{
    switch (p) {
    case HoldupPolicy::None: return "none";
    case HoldupPolicy::Config1: return "config1";
    case HoldupPolicy::Config2: return "config2";
    }
    return "?";
}

std::optional<HoldupPolicy> parse_holdup_policy(std::string_view s) noexcept
{
    for (auto p : {HoldupPolicy::None, HoldupPolicy::Config1, HoldupPolicy::Config2}) {
        if (s == to_string(p)) {
            return p;
        }
    }
    return std::nullopt;
}

SimTime compute_holdup(int can_id, SimTime period, HoldupPolicy policy)
{
    if (policy == HoldupPolicy::None) {
        return SimTime::zero();
    }
    const std::int64_t p = period.ticks();
    if (can_id < 101) {
        return policy == HoldupPolicy::Config2 ? SimTime::ms(1) : SimTime::zero();
    }
    if (can_id <= 200) {
        return SimTime::from_ticks(p / 4);
    }
    if (can_id <= 300) {
        return SimTime::from_ticks(p / 2);
    }
    return SimTime::from_ticks(static_cast<std::int64_t>(static_cast<__int128>(p) * 3 / 4));
}

// ---------------------------------------------------------------------------

bool Pool::insert(PoolEntry e)
{
    e.seq = seq_++;
    const SimTime candidate = e.arrival + e.holdup;
    entries_.push_back(std::move(e));
    if (!deadline_ || candidate < *deadline_) {
        deadline_ = candidate;
        return true;
    }
    return false;
}

std::vector<PoolEntry> Pool::flush()
{
    std::vector<PoolEntry> out;
    out.swap(entries_);
    deadline_.reset();
    return out;
}

PoolTimer::PoolTimer(Kernel& kernel, std::string name, OnFlush on_flush)
    : kernel_(kernel), module_(kernel.register_module(name)), pool_(std::move(name)), on_flush_(std::move(on_flush))
{
}

void PoolTimer::insert(PoolEntry e)
{
    e.arrival = kernel_.now();
    if (pool_.insert(std::move(e)) && !commit_pending_) {
        arm();
    }
}

void PoolTimer::arm()
{
    if (timer_armed_) {
        kernel_.cancel(timer_);
    }
    timer_armed_ = true;
    timer_ = kernel_.schedule(*pool_.deadline(), module_, EventKind::Timer, [this] {
        timer_armed_ = false;
        commit_pending_ = true;
        kernel_.schedule(kernel_.now(), module_, EventKind::Flush, [this] { commit(); });
    });
}

void PoolTimer::commit()
{
    commit_pending_ = false;
    auto entries = pool_.flush();
    ++flushes_;
    on_flush_(std::move(entries), kernel_.now());
}

std::vector<AggregateGroup> group_for_frames(std::vector<PoolEntry> entries)
{
    std::vector<AggregateGroup> groups;
    auto norm = [](const ClassTag& t) {
        const bool avb = t.cls == TrafficClass::AVB_A || t.cls == TrafficClass::AVB_B;
        return std::tuple{avb ? TrafficClass::AVB_A : t.cls, t.cls == TrafficClass::BE ? 0 : t.id};
    };
    for (auto& e : entries) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const AggregateGroup& g) {
            return g.dst == e.dst && norm(g.tag) == norm(e.tag);
        });
        if (it == groups.end()) {
            groups.push_back(AggregateGroup{e.tag, e.dst, {}});
            it = std::prev(groups.end());
        } else {
            auto& tag = it->tag;
            if (tag.cls == TrafficClass::BE) {
                tag.priority = std::max(tag.priority, e.tag.priority);
            } else if (e.tag.cls == TrafficClass::AVB_A) {
                tag.cls = TrafficClass::AVB_A;
            } else if (tag.cls == TrafficClass::RC) {
                tag.priority = std::max(tag.priority, e.tag.priority);
                tag.bag = std::min(tag.bag, e.tag.bag);
            }
        }
        it->entries.push_back(std::move(e));
    }
    return groups;
}

// ---------------------------------------------------------------------------

void RoutingTable::add(std::string ingress, std::string key, RouteAction action)
{
    auto& v = rules_[{std::move(ingress), std::move(key)}];
    if (std::find(v.begin(), v.end(), action) == v.end()) {
        v.push_back(std::move(action));
    }
}

std::span<const RouteAction> RoutingTable::route(std::string_view ingress, std::string_view key) const
{
    auto it = rules_.find(std::pair{std::string(ingress), std::string(key)});
    if (it == rules_.end()) {
        return {};
    }
    return it->second;
}

std::string can_key(std::uint16_t id)
{
    return "can:" + std::to_string(id);
}

std::string class_key(const ClassTag& tag)
{
    switch (tag.cls) {
    case TrafficClass::TT: return "tt:" + std::to_string(tag.id);
    case TrafficClass::RC: return "rc:" + std::to_string(tag.id);
    case TrafficClass::AVB_A:
    case TrafficClass::AVB_B: return "avb:" + std::to_string(tag.id);
    case TrafficClass::BE: return "be:" + std::to_string(tag.priority);
    }
    return "?";
}

} // namespace ivnsim
