#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "attent/tasks.hpp"
#include "attent/teaching.hpp"

namespace attent::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitContract = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitVerifyFailed = 3;

struct RunConfig {
    TaskSpec task;
    TeachingConfig teaching;
    std::string preset_name;  // "", "llm", "vit"

    std::string dataset = "dataset.jsonl";
    int checkpoint_every = 50;
    int ntk_probes = 16;
    std::string output_dir = "out";
    std::uint64_t run_seed = 42;
    bool timing = false;
    bool json_output = false;

    std::vector<std::string> ablate_ratios = {"fixed:1.0"};
    std::vector<std::string> ablate_intervals = {"fixed:1"};
    std::vector<std::string> ablate_strategies = {"hard"};
    double ablate_loss_threshold = 0.1;

    std::uint64_t verify_seed = 20240501;
    std::string verify_corrupt;

    /// Dataset path resolved against the output directory unless absolute.
    std::string dataset_path() const;
};

/// Key/value pairs from an INI-style file ([section] + key = value lines).
std::map<std::string, std::string> parse_ini(const std::string& path);

/// Dotted overrides ("teaching.eta=0.1") applied on top of the file.
void apply_overrides(std::map<std::string, std::string>& kv,
                     const std::vector<std::string>& sets);

/// Build and validate a RunConfig; errors name the offending field path.
RunConfig build_config(const std::map<std::string, std::string>& kv);

int run_gen(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int run_teach(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int run_ntk(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int run_ablate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int run_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Full argv-level entry point used by the binary: parses flags, loads the
/// config, dispatches the subcommand, maps exceptions to exit codes.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace attent::cli
