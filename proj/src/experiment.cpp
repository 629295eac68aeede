#include "clever/experiment.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace clever {

namespace {

// Substream tags so targets, scores and attacks never share draws.
constexpr std::uint64_t kTargetTag = 1;
constexpr std::uint64_t kScoreTag = 2;
constexpr std::uint64_t kAttackTag = 3;

const std::vector<std::string> kAllModes = {"runner_up", "random", "least_likely"};
const std::vector<std::string> kAllOrders = {"first", "second"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

int target_for_mode(const TargetSet& targets, const std::string& mode) {
    if (mode == "runner_up") return targets.runner_up;
    if (mode == "random") return targets.random;
    return targets.least_likely;
}

std::uint64_t mode_id(const std::string& mode) {
    if (mode == "runner_up") return 0;
    if (mode == "random") return 1;
    return 2;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (target_modes.empty()) throw std::invalid_argument("config: no target modes selected");
    for (const std::string& m : target_modes) {
        if (!contains(kAllModes, m)) {
            throw std::invalid_argument("config: unknown target mode \"" + m + "\"");
        }
    }
    if (orders.empty()) throw std::invalid_argument("config: no score orders selected");
    for (const std::string& o : orders) {
        if (!contains(kAllOrders, o)) {
            throw std::invalid_argument("config: unknown score order \"" + o + "\"");
        }
    }
    if (format != "csv" && format != "json") {
        throw std::invalid_argument("config: format must be csv or json");
    }
    plan.validate();
    attack.validate();
}

nlohmann::json ExperimentConfig::to_json() const {
    return nlohmann::json{{"model", model_path},
                          {"data", data_path},
                          {"transform", transform},
                          {"target_modes", target_modes},
                          {"orders", orders},
                          {"nb", plan.batches},
                          {"ns", plan.samples_per_batch},
                          {"radius", plan.radius},
                          {"seed", plan.seed},
                          {"power_iters", power_iters},
                          {"power_tol", power_tol},
                          {"hvp_step", hvp_step},
                          {"attack", run_attack},
                          {"attack_binary_search_steps", attack.binary_search_steps},
                          {"attack_max_iterations", attack.max_iterations},
                          {"attack_initial_penalty", attack.initial_penalty},
                          {"attack_learning_rate", attack.learning_rate},
                          {"attack_confidence", attack.confidence},
                          {"max_inputs", max_inputs}};
}

CleverReport run_experiment(const ExperimentConfig& config, const Model& model,
                            const std::vector<DatasetRecord>& records) {
    config.validate();
    TransformSpec spec = TransformSpec::parse(config.transform, model.input_range().first,
                                              model.input_range().second);

    CleverReport report;
    report.config_echo = config.to_json();

    std::size_t count = records.size();
    if (config.max_inputs >= 0) {
        count = std::min(count, static_cast<std::size_t>(config.max_inputs));
    }
    report.dataset_size = static_cast<int>(count);

    for (std::size_t index = 0; index < count; ++index) {
        const DatasetRecord& record = records[index];
        const int predicted = model.predict(spec.apply(record.input));
        if (predicted != record.label) {
            report.skipped_inputs += 1;
            continue;
        }
        report.evaluated_inputs += 1;

        RngStream target_rng(derive_seed(config.plan.seed, {kTargetTag, index}));
        const TargetSet targets = select_targets(model, spec, record.input, target_rng);

        std::map<int, AttackResult> attack_cache;
        for (const std::string& mode : kAllModes) {
            if (!contains(config.target_modes, mode)) continue;
            const int target = target_for_mode(targets, mode);

            const AttackResult* attack_result = nullptr;
            if (config.run_attack) {
                auto it = attack_cache.find(target);
                if (it == attack_cache.end()) {
                    RngStream attack_rng(derive_seed(
                        config.plan.seed,
                        {kAttackTag, index, static_cast<std::uint64_t>(target)}));
                    it = attack_cache
                             .emplace(target, attack(model, spec, record.input, target,
                                                     config.attack, attack_rng))
                             .first;
                }
                attack_result = &it->second;
            }

            for (const std::string& order : kAllOrders) {
                if (!contains(config.orders, order)) continue;
                ReportRow row;
                row.input_id = record.id;
                row.true_class = record.label;
                row.target_class = target;
                row.target_mode = mode;
                row.order = order;
                try {
                    ScoreParams params;
                    params.order = score_order_from_name(order);
                    params.plan = config.plan;
                    // One substream per (input, mode): both orders see the
                    // same ball draws, as the head-to-head tables expect.
                    params.plan.seed =
                        derive_seed(config.plan.seed, {kScoreTag, index, mode_id(mode)});
                    params.power_iters = config.power_iters;
                    params.power_tol = config.power_tol;
                    params.hvp_step = config.hvp_step;

                    ScoreResult score =
                        clever_score(model, spec, record.input, target, params, record.label);
                    row.gamma = score.gamma;
                    row.lipschitz = score.lipschitz;
                    row.grad_norm = score.grad_norm;
                    row.hessian_norm = score.hessian_norm;
                    row.score = score.score;
                    row.fit = std::move(score.fit);
                    row.wall_seconds = score.wall_seconds;
                } catch (const std::exception& e) {
                    row.error = e.what();
                }
                if (attack_result) {
                    row.attack_run = true;
                    row.attack_success = attack_result->success;
                    row.attack_distortion = attack_result->distortion;
                }
                report.rows.push_back(std::move(row));
            }
        }
    }

    report.recompute_aggregates();
    return report;
}

CleverReport run_experiment(const ExperimentConfig& config) {
    if (config.model_path.empty() || config.data_path.empty()) {
        throw std::invalid_argument("config: model and data paths are required");
    }
    Model model = Model::load_file(config.model_path);
    std::vector<DatasetRecord> records =
        load_dataset(config.data_path, model.input_dim(), model.num_classes());
    return run_experiment(config, model, records);
}

TransformComparison compare_transforms(const ExperimentConfig& config,
                                       const std::vector<std::string>& transforms) {
    if (transforms.size() < 2) {
        throw std::invalid_argument("compare_transforms: need at least two transforms");
    }
    Model model = Model::load_file(config.model_path);
    std::vector<DatasetRecord> records =
        load_dataset(config.data_path, model.input_dim(), model.num_classes());

    const auto [lo, hi] = model.input_range();
    std::vector<TransformSpec> specs;
    for (const std::string& name : transforms) specs.push_back(TransformSpec::parse(name, lo, hi));

    std::size_t count = records.size();
    if (config.max_inputs >= 0) {
        count = std::min(count, static_cast<std::size_t>(config.max_inputs));
    }

    // Only inputs correctly classified under every transform participate,
    // so every column averages over the same points.
    std::vector<std::size_t> usable;
    for (std::size_t index = 0; index < count; ++index) {
        bool ok = true;
        for (const TransformSpec& spec : specs) {
            if (model.predict(spec.apply(records[index].input)) != records[index].label) {
                ok = false;
                break;
            }
        }
        if (ok) usable.push_back(index);
    }

    TransformComparison cmp;
    cmp.transforms = transforms;
    for (const std::string& mode : kAllModes) {
        if (contains(config.target_modes, mode)) cmp.target_modes.push_back(mode);
    }
    cmp.inputs_used = static_cast<int>(usable.size());
    if (usable.empty()) {
        throw std::runtime_error("compare_transforms: no input is correctly classified under "
                                 "every transform");
    }

    cmp.avg_score.assign(specs.size(), std::vector<double>(cmp.target_modes.size(), 0.0));
    for (std::size_t s = 0; s < specs.size(); ++s) {
        for (std::size_t index : usable) {
            const DatasetRecord& record = records[index];
            RngStream target_rng(derive_seed(config.plan.seed, {kTargetTag, index}));
            TargetSet targets = select_targets(model, specs[s], record.input, target_rng);
            for (std::size_t m = 0; m < cmp.target_modes.size(); ++m) {
                ScoreParams params;
                params.order = ScoreOrder::first;
                params.plan = config.plan;
                params.plan.seed = derive_seed(
                    config.plan.seed, {kScoreTag, index, mode_id(cmp.target_modes[m])});
                params.power_iters = config.power_iters;
                params.power_tol = config.power_tol;
                params.hvp_step = config.hvp_step;
                ScoreResult r = clever_score(model, specs[s], record.input,
                                             target_for_mode(targets, cmp.target_modes[m]),
                                             params, record.label);
                cmp.avg_score[s][m] += r.score;
            }
        }
        for (double& v : cmp.avg_score[s]) v /= static_cast<double>(usable.size());
    }

    cmp.ratio_to_baseline.assign(specs.size(),
                                 std::vector<double>(cmp.target_modes.size(), 0.0));
    for (std::size_t s = 0; s < specs.size(); ++s) {
        for (std::size_t m = 0; m < cmp.target_modes.size(); ++m) {
            cmp.ratio_to_baseline[s][m] =
                cmp.avg_score[0][m] != 0.0 ? cmp.avg_score[s][m] / cmp.avg_score[0][m] : 0.0;
        }
    }
    return cmp;
}

std::string comparison_csv(const TransformComparison& cmp) {
    std::string out = "transform,target_mode,avg_first_order_score,ratio_to_baseline\n";
    for (std::size_t s = 0; s < cmp.transforms.size(); ++s) {
        for (std::size_t m = 0; m < cmp.target_modes.size(); ++m) {
            out += cmp.transforms[s] + "," + cmp.target_modes[m] + "," +
                   format_double(cmp.avg_score[s][m]) + "," +
                   format_double(cmp.ratio_to_baseline[s][m]) + "\n";
        }
    }
    return out;
}

}  // namespace clever
