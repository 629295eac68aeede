#pragma once

#include <limits>

#include "clever/model.hpp"
#include "clever/rng.hpp"
#include "clever/transform.hpp"

namespace clever {

// Penalty-based targeted l2 attack; its successful distortion upper-bounds
// the true robustness of the attacked input.
struct AttackParams {
    int binary_search_steps = 5;
    int max_iterations = 500;
    double initial_penalty = 0.01;  // c0
    double learning_rate = 0.01;
    double confidence = 0.0;  // kappa

    void validate() const;
};

struct AttackResult {
    bool success = false;
    Tensor x_adv;
    double distortion = std::numeric_limits<double>::infinity();
};

// Minimizes |delta|^2 + c * max(g_t(x0 + delta), -kappa) under the model's
// box constraint via a tanh change of variables, with doubling/halving
// binary search over c. Gradients go through BPDA when the transform is not
// the identity; success is always re-checked on the true defended forward
// pass. Never throws on failure: the flag and the +inf distortion report it.
AttackResult attack(const Model& model, const TransformSpec& spec, const Tensor& x0, int target,
                    const AttackParams& params, RngStream& rng);

// Minimum-distortion successful targeted attack over all t != c.
AttackResult untargeted_attack(const Model& model, const TransformSpec& spec, const Tensor& x0,
                               const AttackParams& params, RngStream& rng);

}  // namespace clever
