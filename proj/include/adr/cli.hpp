#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adr/error.hpp"

namespace adr {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitJob = 4 };

int exit_code_for(Error::Category category);

/// Entry point of the `adr` tool. Never throws; errors are printed to stderr
/// and mapped to exit codes (2 config, 3 data, 4 job failure).
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

/// Writes a complete synthetic workspace: target and source corpora,
/// lexicons, word vectors, a model registry and `demo.toml`.
void write_demo_workspace(const std::filesystem::path& dir, std::uint64_t seed = 7);

}  // namespace adr
