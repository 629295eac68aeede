#include "clever/attack.hpp"

#include <cmath>
#include <stdexcept>

namespace clever {

void AttackParams::validate() const {
    if (binary_search_steps < 1 || max_iterations < 1) {
        throw std::invalid_argument("attack params: step counts must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("attack params: learning rate must be positive");
    }
    if (!(initial_penalty > 0.0)) {
        throw std::invalid_argument("attack params: initial penalty must be positive");
    }
    if (confidence < 0.0) throw std::invalid_argument("attack params: confidence must be >= 0");
}

namespace {

// Box change of variables: x = lo + (hi - lo) * (tanh(w) + 1) / 2 keeps
// every iterate strictly inside [lo, hi].
double to_box(double w, double lo, double hi) {
    return lo + (hi - lo) * (std::tanh(w) + 1.0) * 0.5;
}

double from_box(double x, double lo, double hi) {
    double u = 2.0 * (x - lo) / (hi - lo) - 1.0;
    u = std::min(std::max(u, -0.999999999999), 0.999999999999);
    return std::atanh(u);
}

}  // namespace

AttackResult attack(const Model& model, const TransformSpec& spec, const Tensor& x0, int target,
                    const AttackParams& params, RngStream& rng) {
    params.validate();
    const auto [lo, hi] = model.input_range();
    const std::size_t d = x0.size();

    auto defended_logits = [&](const Tensor& x) { return model.logits(spec.apply(x)); };

    const int c = argmax_lowest(defended_logits(x0));
    if (c == target) {
        return AttackResult{true, x0, 0.0};
    }

    MarginFn margin(model, c, target);

    Tensor w0({d});
    for (std::size_t i = 0; i < d; ++i) {
        w0[i] = from_box(x0[i], lo, hi) + 1e-6 * rng.normal();
    }

    AttackResult best;
    best.x_adv = x0;

    double penalty = params.initial_penalty;
    for (int step = 0; step < params.binary_search_steps; ++step) {
        Tensor w = w0;
        Tensor x({d});
        bool succeeded_at_this_penalty = false;

        for (int iter = 0; iter < params.max_iterations; ++iter) {
            for (std::size_t i = 0; i < d; ++i) x[i] = to_box(w[i], lo, hi);
            const Tensor xh = spec.apply(x);
            const Tensor z = model.logits(xh);
            const double g = z[static_cast<std::size_t>(c)] - z[static_cast<std::size_t>(target)];

            if (argmax_lowest(z) == target) {
                succeeded_at_this_penalty = true;
                Tensor delta = sub(x, x0);
                double dist = delta.l2_norm();
                if (!best.success || dist < best.distortion) {
                    best.success = true;
                    best.distortion = dist;
                    best.x_adv = x;
                }
            }

            // d/dx [ |x - x0|^2 + penalty * max(g, -kappa) ], margin gradient
            // via BPDA at the transformed point.
            Tensor grad_x = sub(x, x0);
            for (std::size_t i = 0; i < d; ++i) grad_x[i] *= 2.0;
            if (g > -params.confidence) {
                Tensor gm = margin.gradient(xh);
                axpy(penalty, gm, grad_x);
            }
            for (std::size_t i = 0; i < d; ++i) {
                double th = std::tanh(w[i]);
                double dx_dw = (hi - lo) * 0.5 * (1.0 - th * th);
                w[i] -= params.learning_rate * grad_x[i] * dx_dw;
            }
        }

        penalty = succeeded_at_this_penalty ? penalty * 0.5 : penalty * 2.0;
    }

    if (best.success) {
        // Trust only a re-evaluation of the defended pipeline.
        if (argmax_lowest(defended_logits(best.x_adv)) != target) {
            return AttackResult{false, x0, std::numeric_limits<double>::infinity()};
        }
    }
    return best;
}

AttackResult untargeted_attack(const Model& model, const TransformSpec& spec, const Tensor& x0,
                               const AttackParams& params, RngStream& rng) {
    const int c = argmax_lowest(model.logits(spec.apply(x0)));
    AttackResult best;
    best.x_adv = x0;
    for (int t = 0; t < static_cast<int>(model.num_classes()); ++t) {
        if (t == c) continue;
        RngStream sub_rng(derive_seed(rng.next_u64(), {static_cast<std::uint64_t>(t)}));
        AttackResult r = attack(model, spec, x0, t, params, sub_rng);
        if (r.success && r.distortion < best.distortion) best = std::move(r);
    }
    best.success = std::isfinite(best.distortion);
    return best;
}

}  // namespace clever
