#pragma once

#include <stdexcept>
#include <string>

namespace ivnsim {

/// Base class for every error raised by the simulator library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checked SimTime arithmetic left the representable range.
class TimeOverflow : public Error {
public:
    using Error::Error;
};

/// An event was scheduled before the current simulation time.
class SchedulingInPast : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Ethernet payload outside 46..1500 bytes.
class PayloadOutOfRange : public Error {
public:
    using Error::Error;
};

/// Aggregated CAN records do not tile the Ethernet payload.
class MalformedAggregate : public Error {
public:
    using Error::Error;
};

/// The TDMA schedule generator could not place every window.
class ScheduleInfeasible : public Error {
public:
    using Error::Error;
};

/// Hyperperiod of the time-triggered traffic exceeds the configured cap.
class CycleTooLong : public ScheduleInfeasible {
public:
    using ScheduleInfeasible::ScheduleInfeasible;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A compiled configuration violated an invariant that validation should
/// have caught.
class InternalConsistency : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ivnsim
