#include "clever/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace clever {

namespace {

constexpr double kTieTolerance = 1e-12;

const char* kModeOrder[] = {"runner_up", "random", "least_likely"};

int mode_rank(const std::string& mode) {
    for (int i = 0; i < 3; ++i) {
        if (mode == kModeOrder[i]) return i;
    }
    return 3;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::vector<ModeOrderAggregate> aggregates_from_rows(const std::vector<ReportRow>& rows) {
    std::map<std::pair<int, std::string>, ModeOrderAggregate> acc;
    std::map<std::pair<int, std::string>, double> score_sum;
    std::map<std::pair<int, std::string>, double> dist_sum;
    for (const ReportRow& row : rows) {
        if (!row.ok()) continue;
        auto key = std::make_pair(mode_rank(row.target_mode), row.order);
        ModeOrderAggregate& agg = acc[key];
        agg.target_mode = row.target_mode;
        agg.order = row.order;
        agg.rows += 1;
        score_sum[key] += row.score;
        if (row.attack_run && row.attack_success) {
            agg.attack_successes += 1;
            dist_sum[key] += row.attack_distortion;
        }
    }
    std::vector<ModeOrderAggregate> out;
    for (auto& [key, agg] : acc) {
        agg.avg_score = agg.rows > 0 ? score_sum[key] / agg.rows : 0.0;
        agg.avg_attack_distortion =
            agg.attack_successes > 0 ? dist_sum[key] / agg.attack_successes : 0.0;
        out.push_back(agg);
    }
    return out;
}

std::vector<OrderComparison> comparisons_from_rows(const std::vector<ReportRow>& rows) {
    // Pair first/second rows by (input, target mode).
    std::map<std::pair<std::string, std::string>, std::pair<const ReportRow*, const ReportRow*>>
        paired;
    for (const ReportRow& row : rows) {
        if (!row.ok()) continue;
        auto key = std::make_pair(row.input_id, row.target_mode);
        if (row.order == "first") paired[key].first = &row;
        if (row.order == "second") paired[key].second = &row;
    }

    std::map<int, OrderComparison> acc;
    std::map<int, double> inc_first, inc_second;
    for (const auto& [key, pr] : paired) {
        if (!pr.first || !pr.second) continue;
        int rank = mode_rank(key.second);
        OrderComparison& cmp = acc[rank];
        cmp.target_mode = key.second;
        cmp.pairs += 1;
        double s1 = pr.first->score;
        double s2 = pr.second->score;
        if (std::fabs(s1 - s2) <= kTieTolerance) {
            cmp.ties += 1;
        } else if (s1 > s2) {
            cmp.first_larger += 1;
            if (s2 > 0.0) inc_first[rank] += (s1 - s2) / s2 * 100.0;
        } else {
            cmp.second_larger += 1;
            if (s1 > 0.0) inc_second[rank] += (s2 - s1) / s1 * 100.0;
        }
    }

    std::vector<OrderComparison> out;
    for (auto& [rank, cmp] : acc) {
        cmp.pct_first_larger = 100.0 * cmp.first_larger / cmp.pairs;
        cmp.pct_second_larger = 100.0 * cmp.second_larger / cmp.pairs;
        cmp.avg_pct_increase_first =
            cmp.first_larger > 0 ? inc_first[rank] / cmp.first_larger : 0.0;
        cmp.avg_pct_increase_second =
            cmp.second_larger > 0 ? inc_second[rank] / cmp.second_larger : 0.0;
        out.push_back(cmp);
    }
    return out;
}

void CleverReport::recompute_aggregates() {
    aggregates = aggregates_from_rows(rows);
    comparisons = comparisons_from_rows(rows);
}

std::string report_csv(const CleverReport& report) {
    std::ostringstream os;
    os << "input_id,true_class,target_class,target_mode,order,gamma,lipschitz,grad_norm,"
          "hessian_norm,score,evt_location,evt_scale,evt_shape,evt_log_likelihood,"
          "evt_degenerate,evt_converged,attack_run,attack_success,attack_distortion,error\n";
    for (const ReportRow& r : report.rows) {
        os << csv_escape(r.input_id) << ',' << r.true_class << ',' << r.target_class << ','
           << r.target_mode << ',' << r.order << ',' << format_double(r.gamma) << ','
           << format_double(r.lipschitz) << ',' << format_double(r.grad_norm) << ','
           << format_double(r.hessian_norm) << ',' << format_double(r.score) << ','
           << format_double(r.fit.location) << ',' << format_double(r.fit.scale) << ','
           << format_double(r.fit.shape) << ',' << format_double(r.fit.log_likelihood) << ','
           << (r.fit.degenerate ? 1 : 0) << ',' << (r.fit.converged ? 1 : 0) << ','
           << (r.attack_run ? 1 : 0) << ',' << (r.attack_success ? 1 : 0) << ','
           << format_double(r.attack_distortion) << ',' << csv_escape(r.error) << "\n";
    }
    os << "\n";
    os << "target_mode,order,rows,avg_score,attack_successes,avg_attack_distortion\n";
    for (const ModeOrderAggregate& a : report.aggregates) {
        os << a.target_mode << ',' << a.order << ',' << a.rows << ','
           << format_double(a.avg_score) << ',' << a.attack_successes << ','
           << format_double(a.avg_attack_distortion) << "\n";
    }
    os << "\n";
    os << "target_mode,pairs,first_larger,second_larger,ties,pct_first_larger,"
          "pct_second_larger,avg_pct_increase_first,avg_pct_increase_second\n";
    for (const OrderComparison& c : report.comparisons) {
        os << c.target_mode << ',' << c.pairs << ',' << c.first_larger << ',' << c.second_larger
           << ',' << c.ties << ',' << format_double(c.pct_first_larger) << ','
           << format_double(c.pct_second_larger) << ','
           << format_double(c.avg_pct_increase_first) << ','
           << format_double(c.avg_pct_increase_second) << "\n";
    }
    return os.str();
}

namespace {

nlohmann::json row_to_json(const ReportRow& r) {
    return nlohmann::json{{"input_id", r.input_id},
                          {"true_class", r.true_class},
                          {"target_class", r.target_class},
                          {"target_mode", r.target_mode},
                          {"order", r.order},
                          {"gamma", r.gamma},
                          {"lipschitz", r.lipschitz},
                          {"grad_norm", r.grad_norm},
                          {"hessian_norm", r.hessian_norm},
                          {"score", r.score},
                          {"evt", r.fit.to_json()},
                          {"attack_run", r.attack_run},
                          {"attack_success", r.attack_success},
                          {"attack_distortion", r.attack_distortion},
                          {"wall_seconds", r.wall_seconds},
                          {"error", r.error}};
}

ReportRow row_from_json(const nlohmann::json& j) {
    ReportRow r;
    r.input_id = j.at("input_id").get<std::string>();
    r.true_class = j.at("true_class").get<int>();
    r.target_class = j.at("target_class").get<int>();
    r.target_mode = j.at("target_mode").get<std::string>();
    r.order = j.at("order").get<std::string>();
    r.gamma = j.at("gamma").get<double>();
    r.lipschitz = j.at("lipschitz").get<double>();
    r.grad_norm = j.at("grad_norm").get<double>();
    r.hessian_norm = j.at("hessian_norm").get<double>();
    r.score = j.at("score").get<double>();
    const auto& evt = j.at("evt");
    r.fit.location = evt.at("location").get<double>();
    r.fit.scale = evt.at("scale").get<double>();
    r.fit.shape = evt.at("shape").get<double>();
    r.fit.log_likelihood = evt.at("log_likelihood").get<double>();
    r.fit.degenerate = evt.at("degenerate").get<bool>();
    r.fit.converged = evt.at("converged").get<bool>();
    r.fit.block_maxima = evt.at("block_maxima").get<std::vector<double>>();
    r.attack_run = j.at("attack_run").get<bool>();
    r.attack_success = j.at("attack_success").get<bool>();
    r.attack_distortion = j.at("attack_distortion").get<double>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.error = j.at("error").get<std::string>();
    return r;
}

}  // namespace

nlohmann::json report_json(const CleverReport& report) {
    nlohmann::json doc;
    doc["config"] = report.config_echo;
    doc["dataset_size"] = report.dataset_size;
    doc["skipped_inputs"] = report.skipped_inputs;
    doc["evaluated_inputs"] = report.evaluated_inputs;
    doc["rows"] = nlohmann::json::array();
    for (const ReportRow& r : report.rows) doc["rows"].push_back(row_to_json(r));
    doc["aggregates"] = nlohmann::json::array();
    for (const ModeOrderAggregate& a : report.aggregates) {
        doc["aggregates"].push_back({{"target_mode", a.target_mode},
                                     {"order", a.order},
                                     {"rows", a.rows},
                                     {"avg_score", a.avg_score},
                                     {"attack_successes", a.attack_successes},
                                     {"avg_attack_distortion", a.avg_attack_distortion}});
    }
    doc["comparisons"] = nlohmann::json::array();
    for (const OrderComparison& c : report.comparisons) {
        doc["comparisons"].push_back({{"target_mode", c.target_mode},
                                      {"pairs", c.pairs},
                                      {"first_larger", c.first_larger},
                                      {"second_larger", c.second_larger},
                                      {"ties", c.ties},
                                      {"pct_first_larger", c.pct_first_larger},
                                      {"pct_second_larger", c.pct_second_larger},
                                      {"avg_pct_increase_first", c.avg_pct_increase_first},
                                      {"avg_pct_increase_second", c.avg_pct_increase_second}});
    }
    return doc;
}

CleverReport report_from_json(const nlohmann::json& doc) {
    CleverReport report;
    report.config_echo = doc.value("config", nlohmann::json::object());
    report.dataset_size = doc.at("dataset_size").get<int>();
    report.skipped_inputs = doc.at("skipped_inputs").get<int>();
    report.evaluated_inputs = doc.at("evaluated_inputs").get<int>();
    for (const auto& j : doc.at("rows")) report.rows.push_back(row_from_json(j));

    std::vector<ModeOrderAggregate> stored;
    for (const auto& j : doc.at("aggregates")) {
        ModeOrderAggregate a;
        a.target_mode = j.at("target_mode").get<std::string>();
        a.order = j.at("order").get<std::string>();
        a.rows = j.at("rows").get<int>();
        a.avg_score = j.at("avg_score").get<double>();
        a.attack_successes = j.at("attack_successes").get<int>();
        a.avg_attack_distortion = j.at("avg_attack_distortion").get<double>();
        stored.push_back(std::move(a));
    }
    report.recompute_aggregates();
    if (stored.size() != report.aggregates.size()) {
        throw std::invalid_argument("report: stored aggregates do not match rows");
    }
    for (std::size_t i = 0; i < stored.size(); ++i) {
        const ModeOrderAggregate& s = stored[i];
        const ModeOrderAggregate& r = report.aggregates[i];
        if (s.target_mode != r.target_mode || s.order != r.order || s.rows != r.rows ||
            s.attack_successes != r.attack_successes || s.avg_score != r.avg_score ||
            s.avg_attack_distortion != r.avg_attack_distortion) {
            throw std::invalid_argument("report: stored aggregate for (" + s.target_mode + ", " +
                                        s.order + ") does not match recomputation from rows");
        }
    }
    return report;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write to " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace clever
