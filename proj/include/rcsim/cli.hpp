#pragma once

#include <optional>
#include <string>

#include <json.hpp>

namespace rcsim {

// Exit codes: 0 = expectation met, 1 = expectation violated,
// 2 = usage/config error (including enumeration-cap-exceeded).
struct CommandResult {
    int exit_code = 2;
    nlohmann::json report;
};

CommandResult cmd_run(const nlohmann::json& config, const std::string& out_dir, long long cap,
                      std::optional<unsigned long long> seed);
CommandResult cmd_equilibrium(const nlohmann::json& config, const std::string& out_dir,
                              long long cap);
CommandResult cmd_verify(const nlohmann::json& config, const std::string& out_dir, long long cap);

// Subcommand dispatcher used by the binary; config loaded from path.
int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_dir, std::optional<long long> cap,
                std::optional<unsigned long long> seed);

}  // namespace rcsim
