#include <iostream>
#include <string>
#include <vector>

#include "attent/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.size() == 1 && (args[0] == "--help" || args[0] == "-h")) {
        std::cout << "attent — attention-learner teaching toolkit\n\n"
                     "usage: attent <command> [flags]\n\n"
                     "commands:\n"
                     "  gen     generate a synthetic dataset (JSONL)\n"
                     "  teach   run the example-selection teaching loop\n"
                     "  ntk     train with checkpoints and trace the empirical tangent kernel\n"
                     "  ablate  run a ratio x interval x strategy grid\n"
                     "  verify  check analytic gradients and kernels against brute force\n\n"
                     "flags:\n"
                     "  --config PATH   INI-style config file\n"
                     "  --set K=V       override one config key (repeatable)\n"
                     "  --seed U64      override run.seed\n"
                     "  --out DIR       override run.output_dir\n"
                     "  --json          machine-readable stdout\n";
        return 0;
    }
    return attent::cli::dispatch(args, std::cout, std::cerr);
}
