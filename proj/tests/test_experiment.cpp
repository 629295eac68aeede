#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "clever/experiment.hpp"
#include "oracles.hpp"

using clever::CleverReport;
using clever::DatasetRecord;
using clever::ExperimentConfig;
using clever::Model;
using clever::Tensor;
using nlohmann::json;

namespace {

json small_dataset_doc() {
    return json{{"records",
                 {{{"id", "a"}, {"values", {0.1, 0.2, 0.3, 0.4}}, {"label", 0}},
                  {{"id", "b"}, {"values", {0.9, 0.8, 0.7, 0.6}}, {"label", 1}},
                  {{"id", "c"}, {"values", {0.5, 0.5, 0.5, 0.5}}, {"label", 2}}}}};
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name, const std::string& content) {
        path = std::filesystem::temp_directory_path() / name;
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::error_code ec; std::filesystem::remove(path, ec); }
};

ExperimentConfig quick_config(const std::string& model_path, const std::string& data_path) {
    ExperimentConfig config;
    config.model_path = model_path;
    config.data_path = data_path;
    config.plan.batches = 5;
    config.plan.samples_per_batch = 10;
    config.plan.radius = 1.0;
    config.plan.seed = 7;
    config.orders = {"first", "second"};
    return config;
}

}  // namespace

TEST_CASE("load_dataset: empty, well-formed and order-preserving") {
    CHECK(clever::dataset_from_json(json{{"records", json::array()}}, 4, 3).empty());

    auto records = clever::dataset_from_json(small_dataset_doc(), 4, 3);
    REQUIRE(records.size() == 3);
    CHECK(records[0].id == "a");
    CHECK(records[1].id == "b");
    CHECK(records[2].id == "c");
    CHECK(records[1].input[0] == 0.9);
    CHECK(records[2].label == 2);
}

TEST_CASE("load_dataset: rejections carry the record index") {
    json doc = small_dataset_doc();
    doc["records"][1]["label"] = 3;  // == K
    CHECK_THROWS_WITH_AS(clever::dataset_from_json(doc, 4, 3), doctest::Contains("record 1"),
                         std::invalid_argument);

    doc = small_dataset_doc();
    doc["records"][2]["values"] = {0.1, 0.2};
    CHECK_THROWS_WITH_AS(clever::dataset_from_json(doc, 4, 3), doctest::Contains("record 2"),
                         std::invalid_argument);

    doc = small_dataset_doc();
    doc["records"][0].erase("label");
    CHECK_THROWS_AS(clever::dataset_from_json(doc, 4, 3), std::invalid_argument);
}

TEST_CASE("run_experiment: skip accounting and determinism") {
    clever::RngStream rng(50);
    Model model = oracles::random_mlp({4, 10, 3}, clever::ActivationKind::tanh, rng, 2.0);

    // Build 10 records from model predictions, then mislabel 3 of them.
    std::vector<DatasetRecord> records;
    for (int i = 0; i < 10; ++i) {
        DatasetRecord r;
        r.id = "p" + std::to_string(i);
        Tensor x({4});
        for (std::size_t k = 0; k < 4; ++k) x[k] = rng.uniform01();
        r.input = x;
        r.label = model.predict(x);
        if (i < 3) r.label = (r.label + 1) % 3;
        records.push_back(std::move(r));
    }

    ExperimentConfig config = quick_config("", "");
    config.target_modes = {"runner_up", "least_likely"};
    CleverReport report = clever::run_experiment(config, model, records);

    CHECK(report.dataset_size == 10);
    CHECK(report.skipped_inputs == 3);
    CHECK(report.evaluated_inputs == 7);
    CHECK(report.skipped_inputs + report.evaluated_inputs == report.dataset_size);
    // 7 inputs x 2 modes x 2 orders
    CHECK(report.rows.size() == 28);

    CleverReport again = clever::run_experiment(config, model, records);
    CHECK(clever::report_csv(report) == clever::report_csv(again));  // byte identical
}

TEST_CASE("run_experiment: aggregates match recomputation and percentages partition") {
    clever::RngStream rng(51);
    Model model = oracles::random_mlp({3, 8, 3}, clever::ActivationKind::tanh, rng, 2.0);
    std::vector<DatasetRecord> records;
    for (int i = 0; i < 6; ++i) {
        DatasetRecord r;
        r.id = "q" + std::to_string(i);
        Tensor x({3});
        for (std::size_t k = 0; k < 3; ++k) x[k] = rng.uniform01();
        r.input = x;
        r.label = model.predict(x);
        records.push_back(std::move(r));
    }

    ExperimentConfig config = quick_config("", "");
    CleverReport report = clever::run_experiment(config, model, records);

    auto recomputed = clever::aggregates_from_rows(report.rows);
    REQUIRE(recomputed.size() == report.aggregates.size());
    for (std::size_t i = 0; i < recomputed.size(); ++i) {
        CHECK(recomputed[i].avg_score == report.aggregates[i].avg_score);
        CHECK(recomputed[i].rows == report.aggregates[i].rows);
    }
    for (const clever::OrderComparison& cmp : report.comparisons) {
        CHECK(cmp.first_larger + cmp.second_larger + cmp.ties == cmp.pairs);
        CHECK(cmp.pct_first_larger + cmp.pct_second_larger <= 100.0 + 1e-9);
    }
}

TEST_CASE("run_experiment: file round trip with misconfigured paths rejected") {
    ExperimentConfig config = quick_config("", "");
    CHECK_THROWS_AS(clever::run_experiment(config), std::invalid_argument);
    config.model_path = "/nonexistent/model.json";
    config.data_path = "/nonexistent/data.json";
    CHECK_THROWS(clever::run_experiment(config));
}

TEST_CASE("config validation") {
    ExperimentConfig config = quick_config("m", "d");
    config.target_modes = {"sideways"};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config = quick_config("m", "d");
    config.orders = {};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config = quick_config("m", "d");
    config.format = "xml";
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("emit_report: empty and two-row documents") {
    CleverReport empty;
    std::string csv = clever::report_csv(empty);
    // rows header, blank, aggregates header, blank, comparisons header
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

    CleverReport two;
    clever::ReportRow row;
    row.input_id = "x";
    row.target_mode = "runner_up";
    row.order = "first";
    row.score = 0.5;
    two.rows.push_back(row);
    row.order = "second";
    row.score = 0.25;
    two.rows.push_back(row);
    two.recompute_aggregates();
    std::string csv2 = clever::report_csv(two);
    auto first_block_lines = csv2.substr(0, csv2.find("\n\n"));
    CHECK(std::count(first_block_lines.begin(), first_block_lines.end(), '\n') == 2);
    CHECK(two.comparisons.size() == 1);
    CHECK(two.comparisons[0].first_larger == 1);
    CHECK(two.comparisons[0].avg_pct_increase_first == doctest::Approx(100.0));
}

TEST_CASE("report json round trip verifies aggregates") {
    clever::RngStream rng(52);
    Model model = oracles::random_mlp({3, 6, 3}, clever::ActivationKind::tanh, rng, 2.0);
    std::vector<DatasetRecord> records;
    for (int i = 0; i < 3; ++i) {
        DatasetRecord r;
        r.id = "r" + std::to_string(i);
        Tensor x({3});
        for (std::size_t k = 0; k < 3; ++k) x[k] = rng.uniform01();
        r.input = x;
        r.label = model.predict(x);
        records.push_back(std::move(r));
    }
    ExperimentConfig config = quick_config("", "");
    config.target_modes = {"runner_up"};
    CleverReport report = clever::run_experiment(config, model, records);

    json doc = clever::report_json(report);
    CleverReport loaded = clever::report_from_json(doc);
    CHECK(loaded.rows.size() == report.rows.size());

    // Tampering with a stored aggregate must be caught on load.
    doc["aggregates"][0]["avg_score"] = 123.0;
    CHECK_THROWS_WITH_AS(clever::report_from_json(doc), doctest::Contains("does not match"),
                         std::invalid_argument);
}

TEST_CASE("write_file_atomic leaves no temp file behind") {
    auto path = std::filesystem::temp_directory_path() / "clever_report_test.csv";
    clever::write_file_atomic(path.string(), "hello\n");
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "hello\n");
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    std::filesystem::remove(path);
}

TEST_CASE("compare_transforms: identical transforms give ratios exactly 1") {
    clever::RngStream rng(53);
    Model model = oracles::random_mlp({4, 8, 3}, clever::ActivationKind::tanh, rng, 2.0);
    std::vector<DatasetRecord> records;
    json dataset{{"records", json::array()}};
    for (int i = 0; i < 4; ++i) {
        Tensor x({4});
        for (std::size_t k = 0; k < 4; ++k) x[k] = rng.uniform01();
        dataset["records"].push_back(
            {{"id", "s" + std::to_string(i)}, {"values", x.values()}, {"label", model.predict(x)}});
    }
    TempFile model_file("clever_cmp_model.json", model.to_json().dump());
    TempFile data_file("clever_cmp_data.json", dataset.dump());

    ExperimentConfig config = quick_config(model_file.path.string(), data_file.path.string());
    auto cmp = clever::compare_transforms(config, {"identity", "identity"});
    CHECK(cmp.inputs_used == 4);
    for (std::size_t m = 0; m < cmp.target_modes.size(); ++m) {
        CHECK(cmp.ratio_to_baseline[0][m] == 1.0);
        CHECK(cmp.ratio_to_baseline[1][m] == 1.0);
        CHECK(cmp.avg_score[0][m] == cmp.avg_score[1][m]);
    }
}

TEST_CASE("compare_transforms: bitdepth:8 on byte-grid inputs is an exact no-op") {
    clever::RngStream rng(54);
    Model model = oracles::random_mlp({4, 8, 3}, clever::ActivationKind::tanh, rng, 2.0);
    json dataset{{"records", json::array()}};
    for (int i = 0; i < 4; ++i) {
        Tensor x({4});
        for (std::size_t k = 0; k < 4; ++k) {
            x[k] = static_cast<double>(rng.uniform_int(256)) / 255.0;  // byte grid
        }
        dataset["records"].push_back(
            {{"id", "t" + std::to_string(i)}, {"values", x.values()}, {"label", model.predict(x)}});
    }
    TempFile model_file("clever_cmp8_model.json", model.to_json().dump());
    TempFile data_file("clever_cmp8_data.json", dataset.dump());

    ExperimentConfig config = quick_config(model_file.path.string(), data_file.path.string());
    auto cmp = clever::compare_transforms(config, {"identity", "bitdepth:8"});
    for (std::size_t m = 0; m < cmp.target_modes.size(); ++m) {
        CHECK(cmp.ratio_to_baseline[1][m] == 1.0);  // exact fixed points
    }
}

TEST_CASE("compare_transforms needs two specs") {
    ExperimentConfig config = quick_config("m", "d");
    CHECK_THROWS_AS(clever::compare_transforms(config, {"identity"}), std::invalid_argument);
}
