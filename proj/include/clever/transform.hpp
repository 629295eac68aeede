#pragma once

#include <string>

#include "clever/model.hpp"
#include "clever/tensor.hpp"

namespace clever {

// Input transformation h(x) applied ahead of the classifier. The bit-depth
// kind is the byte-model staircase: quantize each element to an 8-bit level
// over [lo, hi] and zero the lowest (8 - bits) bits.
struct TransformSpec {
    enum class Kind { identity, bit_depth };

    Kind kind = Kind::identity;
    int bits = 8;
    double lo = 0.0;
    double hi = 1.0;

    static TransformSpec identity();
    static TransformSpec bit_depth(int bits, double lo = 0.0, double hi = 1.0);

    // CLI syntax: "identity" | "bitdepth:k".
    static TransformSpec parse(const std::string& text, double lo = 0.0, double hi = 1.0);
    std::string to_string() const;

    bool is_identity() const { return kind == Kind::identity; }

    Tensor apply(const Tensor& x) const;
    double apply_element(double v) const;

    void validate() const;
};

// BPDA gradient of g_t . h: the gradient of g_t evaluated at the transformed
// point, used in place of the true (zero almost everywhere) gradient.
Tensor bpda_gradient(MarginFn& margin, const TransformSpec& spec, const Tensor& x);

// Gradient of g_t(h(x)) with h's derivative taken literally: the zero tensor
// for the piecewise-constant staircase, the plain margin gradient otherwise.
// Provided to demonstrate gradient masking.
Tensor true_composed_gradient(MarginFn& margin, const TransformSpec& spec, const Tensor& x);

}  // namespace clever
