"""Discrete-event simulator for mixed CAN / Ethernet in-vehicle networks."""

try:
    from ._ivnsim import (
        Config,
        ConfigError,
        Error,
        InternalConsistency,
        IoError,
        Simulation,
        cli,
        compile,
        format_time,
        from_json,
        load,
        parse_time,
        run,
        validate,
    )
except ImportError:  # extension built in a CMake tree and found on sys.path
    from _ivnsim import (
        Config,
        ConfigError,
        Error,
        InternalConsistency,
        IoError,
        Simulation,
        cli,
        compile,
        format_time,
        from_json,
        load,
        parse_time,
        run,
        validate,
    )

__all__ = [
    "Config",
    "ConfigError",
    "Error",
    "InternalConsistency",
    "IoError",
    "Simulation",
    "cli",
    "compile",
    "format_time",
    "from_json",
    "load",
    "parse_time",
    "run",
    "validate",
]

__version__ = "0.1.0"
