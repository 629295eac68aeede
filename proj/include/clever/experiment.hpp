#pragma once

#include <string>
#include <vector>

#include "clever/attack.hpp"
#include "clever/dataset.hpp"
#include "clever/model.hpp"
#include "clever/report.hpp"
#include "clever/score.hpp"
#include "clever/transform.hpp"

namespace clever {

struct ExperimentConfig {
    std::string model_path;
    std::string data_path;
    std::string transform = "identity";
    std::vector<std::string> target_modes = {"runner_up", "random", "least_likely"};
    std::vector<std::string> orders = {"first", "second"};
    SamplePlan plan;
    int power_iters = 200;
    double power_tol = 1e-6;
    double hvp_step = 1e-4;
    bool run_attack = false;
    AttackParams attack;
    std::string out_path;
    std::string format = "csv";  // csv | json
    int max_inputs = -1;         // -1: all

    void validate() const;
    nlohmann::json to_json() const;
};

// Runs the full protocol: skip misclassified inputs, pick the three target
// classes per input, score each requested (target mode, order) and attach
// the attack distortion ceiling. Deterministic for a fixed seed.
CleverReport run_experiment(const ExperimentConfig& config);

// In-memory variant for callers that already hold the model and data.
CleverReport run_experiment(const ExperimentConfig& config, const Model& model,
                            const std::vector<DatasetRecord>& records);

struct TransformComparison {
    std::vector<std::string> transforms;  // first entry is the baseline
    std::vector<std::string> target_modes;
    // avg_score[t][m]: average first-order score of transforms[t] on mode m;
    // ratio_to_baseline[t][m] = avg_score[t][m] / avg_score[0][m].
    std::vector<std::vector<double>> avg_score;
    std::vector<std::vector<double>> ratio_to_baseline;
    int inputs_used = 0;  // inputs correctly classified under every transform
};

// Desk-scale analogue of the with/without-transformation comparison:
// identical inputs and seeds for every transform, first-order scores only.
TransformComparison compare_transforms(const ExperimentConfig& config,
                                       const std::vector<std::string>& transforms);

std::string comparison_csv(const TransformComparison& cmp);

}  // namespace clever
