#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clever/tensor.hpp"

namespace clever {

enum class ActivationKind { tanh, sigmoid, softplus, relu };

ActivationKind activation_from_name(const std::string& name);
const char* activation_name(ActivationKind kind);
double activation_value(ActivationKind kind, double x);
double activation_derivative(ActivationKind kind, double x);

// True for activations with a continuous second derivative.
bool activation_twice_differentiable(ActivationKind kind);

// Reverse-mode autodiff over a small static computation graph. Nodes are
// appended in topological order; forward caches per-node values for the most
// recent input, backward accumulates adjoints in reverse. A Graph is
// single-writer: forward/backward mutate the caches. Copy the Graph to run
// several evaluations concurrently.
class Graph {
public:
    explicit Graph(std::vector<std::size_t> input_shape);

    int input_node() const { return 0; }
    int affine(int in, Tensor weight, Tensor bias);
    int activation(int in, ActivationKind kind);
    int add(int a, int b);
    int subtract(int a, int b);
    int dot(int a, int b);
    int index_select(int in, int index);
    int constant(Tensor value);

    void set_output(int node);
    int output_node() const { return output_; }

    const std::vector<std::size_t>& input_shape() const { return input_shape_; }
    bool twice_differentiable() const;

    // Evaluates the graph at `input` and caches intermediates for backward.
    const Tensor& forward(const Tensor& input);

    // d(selected output)/d(input) by reverse accumulation. Runs forward on
    // `input` first. With no selector the output must be scalar.
    Tensor gradient(const Tensor& input, std::optional<int> output_index = std::nullopt);

    // Central finite difference of gradients: an approximation of H(input)*v
    // where H is the Hessian of the (scalar) selected output.
    Tensor hvp(const Tensor& input, const Tensor& v, double step,
               std::optional<int> output_index = std::nullopt);

private:
    enum class Op { input, constant, affine, activation, add, subtract, dot, index_select };

    struct Node {
        Op op;
        int lhs = -1;
        int rhs = -1;
        Tensor weight;
        Tensor bias;
        ActivationKind act = ActivationKind::tanh;
        int index = 0;
        Tensor value;  // forward cache
        Tensor grad;   // backward scratch
    };

    int push(Node node);
    void check_node(int id) const;
    void backward(int seed_index);

    std::vector<Node> nodes_;
    std::vector<std::size_t> input_shape_;
    int output_ = 0;
};

}  // namespace clever
