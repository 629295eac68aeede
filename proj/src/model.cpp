#include "clever/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace clever {

Model::Model(std::string name, std::size_t input_dim, std::size_t num_classes,
             std::pair<double, double> input_range, std::vector<Layer> layers)
    : name_(std::move(name)),
      input_dim_(input_dim),
      num_classes_(num_classes),
      input_range_(input_range),
      layers_(std::move(layers)) {
    validate();
}

void Model::validate() const {
    if (input_dim_ < 1) throw std::invalid_argument("model: input_dim must be >= 1");
    if (num_classes_ < 2) throw std::invalid_argument("model: num_classes must be >= 2");
    if (!(input_range_.second > input_range_.first)) {
        throw std::invalid_argument("model: input_range upper bound must exceed lower bound");
    }
    if (layers_.empty()) throw std::invalid_argument("model: at least one layer required");

    std::size_t width = input_dim_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& layer = layers_[i];
        const std::string where = "layer " + std::to_string(i);
        if (layer.kind == Layer::Kind::affine) {
            if (layer.weight.rank() != 2) {
                throw std::invalid_argument(where + ": affine weight must be a matrix");
            }
            if (layer.weight.cols() != width) {
                throw std::invalid_argument(where + ": expects input of length " +
                                            std::to_string(layer.weight.cols()) +
                                            " but previous layer provides " +
                                            std::to_string(width));
            }
            if (layer.bias.size() != layer.weight.rows()) {
                throw std::invalid_argument(where + ": bias length " +
                                            std::to_string(layer.bias.size()) +
                                            " does not match weight rows " +
                                            std::to_string(layer.weight.rows()));
            }
            if (!layer.weight.all_finite() || !layer.bias.all_finite()) {
                throw std::invalid_argument(where + ": non-finite weight or bias element");
            }
            width = layer.weight.rows();
        }
    }
    if (width != num_classes_) {
        throw std::invalid_argument("model: final layer outputs " + std::to_string(width) +
                                    " values, expected num_classes = " +
                                    std::to_string(num_classes_));
    }
}

bool Model::twice_differentiable() const {
    for (const Layer& layer : layers_) {
        if (layer.kind == Layer::Kind::activation &&
            !activation_twice_differentiable(layer.act)) {
            return false;
        }
    }
    return true;
}

Tensor Model::logits(const Tensor& x) const {
    if (x.shape() != std::vector<std::size_t>{input_dim_}) {
        throw std::invalid_argument("logits: expected input of length " +
                                    std::to_string(input_dim_) + ", got shape " +
                                    x.shape_string());
    }
    Tensor cur = x;
    for (const Layer& layer : layers_) {
        if (layer.kind == Layer::Kind::affine) {
            Tensor next({layer.weight.rows()});
            for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
                double s = layer.bias[r];
                const double* wr = layer.weight.data() + r * layer.weight.cols();
                for (std::size_t c = 0; c < layer.weight.cols(); ++c) s += wr[c] * cur[c];
                next[r] = s;
            }
            cur = std::move(next);
        } else {
            for (std::size_t k = 0; k < cur.size(); ++k) {
                cur[k] = activation_value(layer.act, cur[k]);
            }
        }
    }
    return cur;
}

int argmax_lowest(const Tensor& logits) {
    int best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = static_cast<int>(i);
    }
    return best;
}

int Model::predict(const Tensor& x) const { return argmax_lowest(logits(x)); }

Graph Model::make_logits_graph() const {
    Graph g({input_dim_});
    int node = g.input_node();
    for (const Layer& layer : layers_) {
        if (layer.kind == Layer::Kind::affine) {
            node = g.affine(node, layer.weight, layer.bias);
        } else {
            node = g.activation(node, layer.act);
        }
    }
    g.set_output(node);
    return g;
}

Graph Model::make_margin_graph(int true_class, int target_class) const {
    Graph g = make_logits_graph();
    int logits_node = g.output_node();
    int fc = g.index_select(logits_node, true_class);
    int ft = g.index_select(logits_node, target_class);
    int margin = g.subtract(fc, ft);
    g.set_output(margin);
    return g;
}

namespace {

Tensor weight_from_json(const nlohmann::json& rows, const std::string& where) {
    if (!rows.is_array() || rows.empty()) {
        throw std::invalid_argument(where + ": weight must be a non-empty array of rows");
    }
    std::size_t ncols = 0;
    std::vector<double> flat;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (!row.is_array() || row.empty()) {
            throw std::invalid_argument(where + ": weight row " + std::to_string(r) +
                                        " must be a non-empty array");
        }
        if (r == 0) {
            ncols = row.size();
        } else if (row.size() != ncols) {
            throw std::invalid_argument(where + ": ragged weight rows");
        }
        for (const auto& v : row) flat.push_back(v.get<double>());
    }
    return Tensor::matrix(rows.size(), ncols, std::move(flat));
}

}  // namespace

Model Model::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("model document must be an object");
    for (const char* key : {"input_dim", "num_classes", "layers"}) {
        if (!doc.contains(key)) {
            throw std::invalid_argument(std::string("model document missing field \"") + key +
                                        "\"");
        }
    }
    std::string name = doc.value("name", std::string("unnamed"));
    auto input_dim = doc.at("input_dim").get<std::size_t>();
    auto num_classes = doc.at("num_classes").get<std::size_t>();
    std::pair<double, double> range{0.0, 1.0};
    if (doc.contains("input_range")) {
        const auto& r = doc.at("input_range");
        if (!r.is_array() || r.size() != 2) {
            throw std::invalid_argument("model input_range must be [lo, hi]");
        }
        range = {r[0].get<double>(), r[1].get<double>()};
    }

    std::vector<Layer> layers;
    const auto& layer_docs = doc.at("layers");
    if (!layer_docs.is_array()) throw std::invalid_argument("model layers must be an array");
    for (std::size_t i = 0; i < layer_docs.size(); ++i) {
        const auto& ld = layer_docs[i];
        const std::string where = "layer " + std::to_string(i);
        std::string type = ld.value("type", std::string());
        Layer layer;
        if (type == "affine") {
            layer.kind = Layer::Kind::affine;
            if (!ld.contains("weight") || !ld.contains("bias")) {
                throw std::invalid_argument(where + ": affine layer requires weight and bias");
            }
            layer.weight = weight_from_json(ld.at("weight"), where);
            layer.bias = Tensor::vector(ld.at("bias").get<std::vector<double>>());
            if (!layer.weight.all_finite() || !layer.bias.all_finite()) {
                throw std::invalid_argument(where + ": non-finite weight or bias element");
            }
        } else if (type == "activation") {
            layer.kind = Layer::Kind::activation;
            if (!ld.contains("kind")) {
                throw std::invalid_argument(where + ": activation layer requires kind");
            }
            layer.act = activation_from_name(ld.at("kind").get<std::string>());
        } else {
            throw std::invalid_argument(where + ": unknown layer type \"" + type + "\"");
        }
        layers.push_back(std::move(layer));
    }
    return Model(std::move(name), input_dim, num_classes, range, std::move(layers));
}

Model Model::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("model file " + path + " is not valid JSON: " + e.what());
    }
    return from_json(doc);
}

nlohmann::json Model::to_json() const {
    nlohmann::json doc;
    doc["name"] = name_;
    doc["input_dim"] = input_dim_;
    doc["num_classes"] = num_classes_;
    doc["input_range"] = {input_range_.first, input_range_.second};
    doc["layers"] = nlohmann::json::array();
    for (const Layer& layer : layers_) {
        nlohmann::json ld;
        if (layer.kind == Layer::Kind::affine) {
            ld["type"] = "affine";
            auto rows = nlohmann::json::array();
            for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
                auto row = nlohmann::json::array();
                for (std::size_t c = 0; c < layer.weight.cols(); ++c) {
                    row.push_back(layer.weight.at(r, c));
                }
                rows.push_back(std::move(row));
            }
            ld["weight"] = std::move(rows);
            ld["bias"] = layer.bias.values();
        } else {
            ld["type"] = "activation";
            ld["kind"] = activation_name(layer.act);
        }
        doc["layers"].push_back(std::move(ld));
    }
    return doc;
}

void Model::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << to_json().dump(2) << "\n";
}

namespace {

Graph checked_margin_graph(const Model& model, int c, int t) {
    int K = static_cast<int>(model.num_classes());
    if (c < 0 || c >= K || t < 0 || t >= K) {
        throw std::invalid_argument("margin: class indices out of range");
    }
    if (c == t) throw std::invalid_argument("margin: true class equals target class");
    return model.make_margin_graph(c, t);
}

}  // namespace

MarginFn::MarginFn(const Model& model, int true_class, int target_class)
    : model_(&model),
      c_(true_class),
      t_(target_class),
      graph_(checked_margin_graph(model, true_class, target_class)) {}

double MarginFn::value(const Tensor& x) { return graph_.forward(x)[0]; }

Tensor MarginFn::gradient(const Tensor& x) { return graph_.gradient(x); }

}  // namespace clever
