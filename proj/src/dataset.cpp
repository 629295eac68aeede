#include "clever/dataset.hpp"

#include <fstream>
#include <stdexcept>

namespace clever {

std::vector<DatasetRecord> dataset_from_json(const nlohmann::json& doc, std::size_t input_dim,
                                             std::size_t num_classes) {
    if (!doc.is_object() || !doc.contains("records") || !doc.at("records").is_array()) {
        throw std::invalid_argument("dataset document must be {\"records\": [...]}");
    }
    std::vector<DatasetRecord> out;
    const auto& records = doc.at("records");
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::string where = "dataset record " + std::to_string(i);
        if (!r.is_object() || !r.contains("id") || !r.contains("values") || !r.contains("label")) {
            throw std::invalid_argument(where + ": requires id, values and label");
        }
        DatasetRecord rec;
        rec.id = r.at("id").is_string() ? r.at("id").get<std::string>()
                                        : r.at("id").dump();
        std::vector<double> values;
        try {
            values = r.at("values").get<std::vector<double>>();
        } catch (const nlohmann::json::exception&) {
            throw std::invalid_argument(where + ": values must be an array of reals");
        }
        if (values.size() != input_dim) {
            throw std::invalid_argument(where + ": expected " + std::to_string(input_dim) +
                                        " values, got " + std::to_string(values.size()));
        }
        try {
            rec.input = Tensor::checked({input_dim}, std::move(values));
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument(where + ": non-finite value");
        }
        rec.label = r.at("label").get<int>();
        if (rec.label < 0 || static_cast<std::size_t>(rec.label) >= num_classes) {
            throw std::invalid_argument(where + ": label " + std::to_string(rec.label) +
                                        " out of range [0, " + std::to_string(num_classes) + ")");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<DatasetRecord> load_dataset(const std::string& path, std::size_t input_dim,
                                        std::size_t num_classes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("dataset file " + path + " is not valid JSON: " + e.what());
    }
    return dataset_from_json(doc, input_dim, num_classes);
}

nlohmann::json dataset_to_json(const std::vector<DatasetRecord>& records) {
    nlohmann::json doc;
    doc["records"] = nlohmann::json::array();
    for (const DatasetRecord& r : records) {
        doc["records"].push_back(
            {{"id", r.id}, {"values", r.input.values()}, {"label", r.label}});
    }
    return doc;
}

}  // namespace clever
