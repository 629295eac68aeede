#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clever/graph.hpp"
#include "clever/tensor.hpp"

namespace clever {

// One layer of a feed-forward classifier: either an affine map y = Wx + b or
// an elementwise activation.
struct Layer {
    enum class Kind { affine, activation };
    Kind kind = Kind::affine;
    Tensor weight;  // (out, in), affine only
    Tensor bias;    // (out), affine only
    ActivationKind act = ActivationKind::tanh;
};

// K-class classifier f: R^d -> R^K evaluated on logits. Immutable after
// load; safe for concurrent readers.
class Model {
public:
    Model(std::string name, std::size_t input_dim, std::size_t num_classes,
          std::pair<double, double> input_range, std::vector<Layer> layers);

    static Model from_json(const nlohmann::json& doc);
    static Model load_file(const std::string& path);
    nlohmann::json to_json() const;
    void save_file(const std::string& path) const;

    const std::string& name() const { return name_; }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t num_classes() const { return num_classes_; }
    std::pair<double, double> input_range() const { return input_range_; }
    const std::vector<Layer>& layers() const { return layers_; }

    bool twice_differentiable() const;

    // Raw pre-softmax scores; no normalization is ever applied.
    Tensor logits(const Tensor& x) const;

    // Index of the maximum logit; ties break to the lowest index.
    int predict(const Tensor& x) const;

    Graph make_logits_graph() const;

    // Graph computing g_t(x) = f_c(x) - f_t(x).
    Graph make_margin_graph(int true_class, int target_class) const;

private:
    void validate() const;

    std::string name_;
    std::size_t input_dim_ = 0;
    std::size_t num_classes_ = 0;
    std::pair<double, double> input_range_{0.0, 1.0};
    std::vector<Layer> layers_;
};

int argmax_lowest(const Tensor& logits);

// Margin function g_t(x) = f_c(x) - f_t(x) with its reverse-mode derivatives.
// Holds a private graph; single-writer, copy per worker for parallel use.
class MarginFn {
public:
    MarginFn(const Model& model, int true_class, int target_class);

    int true_class() const { return c_; }
    int target_class() const { return t_; }
    const Model& model() const { return *model_; }

    double value(const Tensor& x);
    Tensor gradient(const Tensor& x);
    Graph& graph() { return graph_; }

private:
    const Model* model_;
    int c_;
    int t_;
    Graph graph_;
};

}  // namespace clever
