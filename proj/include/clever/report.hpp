#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "clever/evt.hpp"
#include "clever/score.hpp"

namespace clever {

// One evaluated (input, target mode, order) combination.
struct ReportRow {
    std::string input_id;
    int true_class = 0;
    int target_class = 0;
    std::string target_mode;  // runner_up | random | least_likely
    std::string order;        // first | second
    double gamma = 0.0;
    double lipschitz = 0.0;
    double grad_norm = 0.0;
    double hessian_norm = 0.0;
    double score = 0.0;
    EvtFit fit;
    bool attack_run = false;
    bool attack_success = false;
    double attack_distortion = 0.0;
    double wall_seconds = 0.0;
    std::string error;  // non-empty when this row failed; excluded from aggregates

    bool ok() const { return error.empty(); }
};

struct ModeOrderAggregate {
    std::string target_mode;
    std::string order;
    int rows = 0;
    double avg_score = 0.0;
    int attack_successes = 0;
    double avg_attack_distortion = 0.0;  // over successful attacks; 0 when none
};

// Head-to-head comparison of the two orders for one target mode. Ties
// (scores equal within 1e-12) are counted separately; the average percent
// increase is taken over the inputs where that order wins.
struct OrderComparison {
    std::string target_mode;
    int pairs = 0;
    int first_larger = 0;
    int second_larger = 0;
    int ties = 0;
    double pct_first_larger = 0.0;
    double pct_second_larger = 0.0;
    double avg_pct_increase_first = 0.0;
    double avg_pct_increase_second = 0.0;
};

struct CleverReport {
    nlohmann::json config_echo;  // flags the run was produced with
    int dataset_size = 0;
    int skipped_inputs = 0;   // misclassified, not evaluated
    int evaluated_inputs = 0;
    std::vector<ReportRow> rows;
    std::vector<ModeOrderAggregate> aggregates;
    std::vector<OrderComparison> comparisons;

    // Rebuilds aggregates and comparisons from the rows.
    void recompute_aggregates();
};

std::vector<ModeOrderAggregate> aggregates_from_rows(const std::vector<ReportRow>& rows);
std::vector<OrderComparison> comparisons_from_rows(const std::vector<ReportRow>& rows);

// csv: a rows table, then an aggregates table, then a comparisons table,
// separated by blank lines. Deterministic byte-for-byte for a given report
// (timing is deliberately not part of the csv).
std::string report_csv(const CleverReport& report);

// Full nested report including EVT diagnostics and timing.
nlohmann::json report_json(const CleverReport& report);

// Parses a structured-text report and verifies the stored aggregates match
// recomputation from the rows.
CleverReport report_from_json(const nlohmann::json& doc);

// Shortest round-trip decimal form of a double (the csv number format).
std::string format_double(double v);

// Writes via a temp file and rename so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace clever
