#include "clever/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace clever {

ActivationKind activation_from_name(const std::string& name) {
    if (name == "tanh") return ActivationKind::tanh;
    if (name == "sigmoid") return ActivationKind::sigmoid;
    if (name == "softplus") return ActivationKind::softplus;
    if (name == "relu") return ActivationKind::relu;
    throw std::invalid_argument("unknown activation kind \"" + name + "\"");
}

const char* activation_name(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::tanh: return "tanh";
        case ActivationKind::sigmoid: return "sigmoid";
        case ActivationKind::softplus: return "softplus";
        case ActivationKind::relu: return "relu";
    }
    return "?";
}

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double activation_value(ActivationKind kind, double x) {
    switch (kind) {
        case ActivationKind::tanh: return std::tanh(x);
        case ActivationKind::sigmoid: return stable_sigmoid(x);
        case ActivationKind::softplus: return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
        case ActivationKind::relu: return x > 0.0 ? x : 0.0;
    }
    return 0.0;
}

double activation_derivative(ActivationKind kind, double x) {
    switch (kind) {
        case ActivationKind::tanh: {
            double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case ActivationKind::sigmoid: {
            double s = stable_sigmoid(x);
            return s * (1.0 - s);
        }
        case ActivationKind::softplus: return stable_sigmoid(x);
        case ActivationKind::relu: return x > 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

bool activation_twice_differentiable(ActivationKind kind) {
    return kind != ActivationKind::relu;
}

Graph::Graph(std::vector<std::size_t> input_shape) : input_shape_(std::move(input_shape)) {
    Node n;
    n.op = Op::input;
    n.value = Tensor(input_shape_);
    nodes_.push_back(std::move(n));
}

int Graph::push(Node node) {
    node.grad = Tensor(node.value.shape());
    nodes_.push_back(std::move(node));
    output_ = static_cast<int>(nodes_.size()) - 1;
    return output_;
}

void Graph::check_node(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size())) {
        throw std::invalid_argument("graph node id out of range: " + std::to_string(id));
    }
}

int Graph::affine(int in, Tensor weight, Tensor bias) {
    check_node(in);
    if (weight.rank() != 2) throw std::invalid_argument("affine weight must be a matrix");
    if (bias.rank() != 1 || bias.size() != weight.rows()) {
        throw std::invalid_argument("affine bias length must equal weight rows");
    }
    if (nodes_[in].value.size() != weight.cols()) {
        throw std::invalid_argument("affine expects input of length " +
                                    std::to_string(weight.cols()) + ", node provides " +
                                    std::to_string(nodes_[in].value.size()));
    }
    Node n;
    n.op = Op::affine;
    n.lhs = in;
    n.value = Tensor({weight.rows()});
    n.weight = std::move(weight);
    n.bias = std::move(bias);
    return push(std::move(n));
}

int Graph::activation(int in, ActivationKind kind) {
    check_node(in);
    Node n;
    n.op = Op::activation;
    n.lhs = in;
    n.act = kind;
    n.value = Tensor(nodes_[in].value.shape());
    return push(std::move(n));
}

int Graph::add(int a, int b) {
    check_node(a);
    check_node(b);
    if (!nodes_[a].value.same_shape(nodes_[b].value)) {
        throw std::invalid_argument("add: operand shapes differ");
    }
    Node n;
    n.op = Op::add;
    n.lhs = a;
    n.rhs = b;
    n.value = Tensor(nodes_[a].value.shape());
    return push(std::move(n));
}

int Graph::subtract(int a, int b) {
    check_node(a);
    check_node(b);
    if (!nodes_[a].value.same_shape(nodes_[b].value)) {
        throw std::invalid_argument("subtract: operand shapes differ");
    }
    Node n;
    n.op = Op::subtract;
    n.lhs = a;
    n.rhs = b;
    n.value = Tensor(nodes_[a].value.shape());
    return push(std::move(n));
}

int Graph::dot(int a, int b) {
    check_node(a);
    check_node(b);
    if (nodes_[a].value.size() != nodes_[b].value.size()) {
        throw std::invalid_argument("dot: operand lengths differ");
    }
    Node n;
    n.op = Op::dot;
    n.lhs = a;
    n.rhs = b;
    n.value = Tensor({1});
    return push(std::move(n));
}

int Graph::index_select(int in, int index) {
    check_node(in);
    if (index < 0 || static_cast<std::size_t>(index) >= nodes_[in].value.size()) {
        throw std::invalid_argument("index_select: index " + std::to_string(index) +
                                    " out of range for length " +
                                    std::to_string(nodes_[in].value.size()));
    }
    Node n;
    n.op = Op::index_select;
    n.lhs = in;
    n.index = index;
    n.value = Tensor({1});
    return push(std::move(n));
}

int Graph::constant(Tensor value) {
    Node n;
    n.op = Op::constant;
    n.value = std::move(value);
    return push(std::move(n));
}

void Graph::set_output(int node) {
    check_node(node);
    output_ = node;
}

bool Graph::twice_differentiable() const {
    for (const Node& n : nodes_) {
        if (n.op == Op::activation && !activation_twice_differentiable(n.act)) return false;
    }
    return true;
}

const Tensor& Graph::forward(const Tensor& input) {
    if (input.shape() != input_shape_) {
        throw std::invalid_argument("forward: expected input shape " +
                                    Tensor(input_shape_).shape_string() + ", got " +
                                    input.shape_string());
    }
    nodes_[0].value = input;
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        Node& n = nodes_[i];
        switch (n.op) {
            case Op::input:
            case Op::constant:
                break;
            case Op::affine: {
                const Tensor& x = nodes_[n.lhs].value;
                for (std::size_t r = 0; r < n.weight.rows(); ++r) {
                    double s = n.bias[r];
                    const double* wr = n.weight.data() + r * n.weight.cols();
                    for (std::size_t c = 0; c < n.weight.cols(); ++c) s += wr[c] * x[c];
                    n.value[r] = s;
                }
                break;
            }
            case Op::activation: {
                const Tensor& x = nodes_[n.lhs].value;
                for (std::size_t k = 0; k < x.size(); ++k) {
                    n.value[k] = activation_value(n.act, x[k]);
                }
                break;
            }
            case Op::add: {
                const Tensor& a = nodes_[n.lhs].value;
                const Tensor& b = nodes_[n.rhs].value;
                for (std::size_t k = 0; k < a.size(); ++k) n.value[k] = a[k] + b[k];
                break;
            }
            case Op::subtract: {
                const Tensor& a = nodes_[n.lhs].value;
                const Tensor& b = nodes_[n.rhs].value;
                for (std::size_t k = 0; k < a.size(); ++k) n.value[k] = a[k] - b[k];
                break;
            }
            case Op::dot:
                n.value[0] = nodes_[n.lhs].value.dot(nodes_[n.rhs].value);
                break;
            case Op::index_select:
                n.value[0] = nodes_[n.lhs].value[static_cast<std::size_t>(n.index)];
                break;
        }
    }
    return nodes_[output_].value;
}

void Graph::backward(int seed_index) {
    for (Node& n : nodes_) n.grad.fill(0.0);
    nodes_[0].grad = Tensor(input_shape_);
    nodes_[output_].grad[static_cast<std::size_t>(seed_index)] = 1.0;

    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        switch (n.op) {
            case Op::input:
            case Op::constant:
                break;
            case Op::affine: {
                Tensor& gx = nodes_[n.lhs].grad;
                for (std::size_t r = 0; r < n.weight.rows(); ++r) {
                    double gy = n.grad[r];
                    if (gy == 0.0) continue;
                    const double* wr = n.weight.data() + r * n.weight.cols();
                    for (std::size_t c = 0; c < n.weight.cols(); ++c) gx[c] += wr[c] * gy;
                }
                break;
            }
            case Op::activation: {
                const Tensor& x = nodes_[n.lhs].value;
                Tensor& gx = nodes_[n.lhs].grad;
                for (std::size_t k = 0; k < x.size(); ++k) {
                    gx[k] += activation_derivative(n.act, x[k]) * n.grad[k];
                }
                break;
            }
            case Op::add: {
                Tensor& ga = nodes_[n.lhs].grad;
                Tensor& gb = nodes_[n.rhs].grad;
                for (std::size_t k = 0; k < n.grad.size(); ++k) {
                    ga[k] += n.grad[k];
                    gb[k] += n.grad[k];
                }
                break;
            }
            case Op::subtract: {
                Tensor& ga = nodes_[n.lhs].grad;
                Tensor& gb = nodes_[n.rhs].grad;
                for (std::size_t k = 0; k < n.grad.size(); ++k) {
                    ga[k] += n.grad[k];
                    gb[k] -= n.grad[k];
                }
                break;
            }
            case Op::dot: {
                double gy = n.grad[0];
                const Tensor& a = nodes_[n.lhs].value;
                const Tensor& b = nodes_[n.rhs].value;
                axpy(gy, b, nodes_[n.lhs].grad);
                axpy(gy, a, nodes_[n.rhs].grad);
                break;
            }
            case Op::index_select:
                nodes_[n.lhs].grad[static_cast<std::size_t>(n.index)] += n.grad[0];
                break;
        }
    }
}

Tensor Graph::gradient(const Tensor& input, std::optional<int> output_index) {
    forward(input);
    const Tensor& out = nodes_[output_].value;
    int seed = 0;
    if (output_index.has_value()) {
        if (*output_index < 0 || static_cast<std::size_t>(*output_index) >= out.size()) {
            throw std::invalid_argument("gradient: output index out of range");
        }
        seed = *output_index;
    } else if (!out.is_scalar()) {
        throw std::invalid_argument(
            "gradient: output is not scalar; an output index selector is required");
    }
    backward(seed);
    return nodes_[0].grad;
}

Tensor Graph::hvp(const Tensor& input, const Tensor& v, double step,
                  std::optional<int> output_index) {
    if (!v.same_shape(input)) {
        throw std::invalid_argument("hvp: direction shape must match input shape");
    }
    if (!(step > 0.0)) {
        throw std::invalid_argument("hvp: step must be positive");
    }
    Tensor plus = input;
    Tensor minus = input;
    axpy(step, v, plus);
    axpy(-step, v, minus);
    Tensor gp = gradient(plus, output_index);
    Tensor gm = gradient(minus, output_index);
    Tensor out(input.shape());
    double inv = 1.0 / (2.0 * step);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (gp[i] - gm[i]) * inv;
    if (!out.all_finite()) {
        throw std::runtime_error("hvp: non-finite gradient difference");
    }
    return out;
}

}  // namespace clever
