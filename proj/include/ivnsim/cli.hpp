#pragma once

#include "ivnsim/config.hpp"
#include "ivnsim/diagnostics.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ivnsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSemantic = 1;
inline constexpr int kExitIo = 2;

struct LoadOptions {
    std::string network;
    std::vector<std::pair<std::string, std::string>> overrides;
};

/// Loads one scenario from ANDL files (merged in order) or a single config
/// JSON file. Overrides apply after the inline ini. Throws IoError when a file
/// cannot be read; everything else is reported through `diags`, whose
/// positions index into `files`.
NetworkConfig load_scenario(const std::vector<std::string>& files, const LoadOptions& options, Diagnostics& diags);

/// Entry point of the `ivnsim` tool; args exclude the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ivnsim::cli
