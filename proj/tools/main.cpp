#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rcsim/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"rcsim - rational-agent consensus simulator and equilibrium checker"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<long long> cap;
    std::optional<unsigned long long> seed;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "scenario config (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory for traces/reports");
        sub->add_option("--cap", cap, "enumeration cap (joint runs)");
        sub->add_option("--seed", seed, "seed for the sampling fallback");
    };
    add_common(app.add_subcommand("run", "execute or enumerate runs, write traces and a summary"));
    add_common(app.add_subcommand("equilibrium", "search a strategy space for profitable deviations"));
    add_common(app.add_subcommand("verify", "run an analysis check from the config"));

    CLI11_PARSE(app, argc, argv);
    return rcsim::run_command(app.get_subcommands().front()->get_name(), config_path, out_dir,
                              cap, seed);
}
