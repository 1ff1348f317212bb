#pragma once

#include "ivnsim/time.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace ivnsim {

/// Identity of one released message instance, carried alongside frames so
/// sinks can compute end-to-end latency. Not part of any wire format.
struct Carried {
    std::uint32_t message = 0;  // index into the configuration's message list
    std::uint64_t instance = 0; // release counter of that message
    SimTime created{};
    std::uint32_t origin = 0;   // sending device index
};

inline constexpr int kCanMaxPayload = 8;
inline constexpr std::uint16_t kCanMaxId = 0x7FF;

struct CanFrame {
    std::uint16_t id = 0;
    std::uint8_t payload_len = 0;
    std::array<std::uint8_t, kCanMaxPayload> payload{};
    std::uint32_t origin_bus = 0;
    SimTime creation_time{};
    Carried carried{};
};

} // namespace ivnsim
