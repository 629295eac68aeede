#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "clever/tensor.hpp"

namespace clever {

struct DatasetRecord {
    std::string id;
    Tensor input;
    int label = 0;
};

// Dataset document: {"records": [{"id", "values": [...], "label"}, ...]}.
// Validates finiteness, consistent dimension and label range.
std::vector<DatasetRecord> dataset_from_json(const nlohmann::json& doc, std::size_t input_dim,
                                             std::size_t num_classes);
std::vector<DatasetRecord> load_dataset(const std::string& path, std::size_t input_dim,
                                        std::size_t num_classes);

nlohmann::json dataset_to_json(const std::vector<DatasetRecord>& records);

}  // namespace clever
