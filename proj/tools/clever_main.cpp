#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clever/experiment.hpp"
#include "clever/report.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void add_common_flags(CLI::App* cmd, clever::ExperimentConfig& config, std::string& targets,
                      std::string& out_path) {
    cmd->add_option("--model", config.model_path, "model JSON file")->required();
    cmd->add_option("--data", config.data_path, "dataset JSON file")->required();
    cmd->add_option("--targets", targets, "comma list of runner_up,random,least_likely");
    cmd->add_option("--nb", config.plan.batches, "number of sample batches");
    cmd->add_option("--ns", config.plan.samples_per_batch, "samples per batch");
    cmd->add_option("--radius", config.plan.radius, "ball radius R (also caps the score)");
    cmd->add_option("--seed", config.plan.seed, "RNG seed");
    cmd->add_option("--power-iters", config.power_iters, "max power iterations per point");
    cmd->add_option("--power-tol", config.power_tol, "power iteration tolerance");
    cmd->add_option("--hvp-step", config.hvp_step, "Hessian-vector finite-difference base step");
    cmd->add_option("--max-inputs", config.max_inputs, "evaluate at most this many inputs");
    cmd->add_option("--out", out_path, "output file (default: stdout)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CLEVER robustness scores with attack-based upper bounds"};
    app.require_subcommand(1);

    clever::ExperimentConfig config;
    std::string targets = "runner_up,random,least_likely";
    std::string orders = "first,second";
    std::string out_path;
    std::string transforms_list;

    CLI::App* score = app.add_subcommand("score", "score a dataset against a model");
    add_common_flags(score, config, targets, out_path);
    score->add_option("--transform", config.transform, "identity | bitdepth:k");
    score->add_option("--order", orders, "comma list of first,second");
    score->add_flag("--attack", config.run_attack, "also run the l2 attack upper bound");
    score->add_option("--attack-steps", config.attack.binary_search_steps,
                      "attack binary search steps");
    score->add_option("--attack-iters", config.attack.max_iterations,
                      "attack iterations per step");
    score->add_option("--attack-lr", config.attack.learning_rate, "attack learning rate");
    score->add_option("--attack-c0", config.attack.initial_penalty, "attack initial penalty");
    score->add_option("--attack-kappa", config.attack.confidence, "attack confidence margin");
    score->add_option("--format", config.format, "csv | json");

    CLI::App* compare = app.add_subcommand(
        "compare", "compare first-order scores across input transforms");
    add_common_flags(compare, config, targets, out_path);
    compare->add_option("--transforms", transforms_list,
                        "comma list of transforms; first is the baseline")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        config.target_modes = split_list(targets);
        config.orders = split_list(orders);
        config.out_path = out_path;

        if (score->parsed()) {
            clever::CleverReport report = clever::run_experiment(config);
            std::string content = config.format == "json"
                                      ? clever::report_json(report).dump(2) + "\n"
                                      : clever::report_csv(report);
            if (out_path.empty()) {
                std::cout << content;
            } else {
                clever::write_file_atomic(out_path, content);
                std::cerr << "wrote " << out_path << " (" << report.rows.size() << " rows, "
                          << report.skipped_inputs << " inputs skipped)\n";
            }
        } else {
            clever::TransformComparison cmp =
                clever::compare_transforms(config, split_list(transforms_list));
            std::string content = clever::comparison_csv(cmp);
            if (out_path.empty()) {
                std::cout << content;
            } else {
                clever::write_file_atomic(out_path, content);
                std::cerr << "wrote " << out_path << " (" << cmp.inputs_used
                          << " inputs compared)\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
