#include "clever/score.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace clever {

ScoreOrder score_order_from_name(const std::string& name) {
    if (name == "first") return ScoreOrder::first;
    if (name == "second") return ScoreOrder::second;
    throw std::invalid_argument("unknown score order \"" + name + "\" (expected first|second)");
}

const char* score_order_name(ScoreOrder order) {
    return order == ScoreOrder::first ? "first" : "second";
}

void ScoreParams::validate() const {
    plan.validate();
    if (power_iters < 1) throw std::invalid_argument("score params: power_iters must be >= 1");
    if (!(power_tol > 0.0)) throw std::invalid_argument("score params: power_tol must be > 0");
    if (!(hvp_step > 0.0)) throw std::invalid_argument("score params: hvp_step must be > 0");
}

double first_order_score(double gamma, double lipschitz, double radius) {
    if (gamma < 0.0) {
        throw std::invalid_argument("first_order_score: negative margin (input misclassified "
                                    "with respect to the target)");
    }
    if (lipschitz < 0.0) throw std::invalid_argument("first_order_score: negative Lipschitz");
    if (!(radius > 0.0)) throw std::invalid_argument("first_order_score: radius must be > 0");
    if (gamma == 0.0) return 0.0;
    if (lipschitz == 0.0) return radius;
    return std::min(gamma / lipschitz, radius);
}

double second_order_score(const BoundInputs& bounds, double radius) {
    if (bounds.gamma < 0.0) {
        throw std::invalid_argument("second_order_score: negative margin (input misclassified "
                                    "with respect to the target)");
    }
    if (!(radius > 0.0)) throw std::invalid_argument("second_order_score: radius must be > 0");
    const double gamma = bounds.gamma;
    const double b = bounds.grad_norm;
    const double a = std::max(bounds.hessian_norm, 0.0);  // norm estimate; clamp noise

    if (a < 1e-12) {
        if (b < 1e-12) return radius;
        return std::min(gamma / b, radius);
    }
    // (-b + sqrt(b^2 + 2 a gamma)) / a, in the cancellation-free form.
    double root = std::sqrt(b * b + 2.0 * a * gamma);
    double eps = 2.0 * gamma / (b + root);
    return std::min(eps, radius);
}

double spectral_norm_at(Graph& graph, const Tensor& x, int max_iters, double tol,
                        double hvp_step, RngStream& rng, bool* converged) {
    if (converged) *converged = true;
    Tensor v = rng.unit_vector(x.size());
    double rayleigh = 0.0;
    bool have_prev = false;
    for (int it = 0; it < max_iters; ++it) {
        Tensor hv = graph.hvp(x, v, hvp_step);
        double norm = hv.l2_norm();
        if (norm == 0.0) {
            if (it == 0) return 0.0;  // zero Hessian
            return std::fabs(rayleigh);
        }
        double current = v.dot(hv);  // |v| == 1
        if (have_prev &&
            std::fabs(current - rayleigh) <= tol * std::max(std::fabs(current), 1e-300)) {
            return std::fabs(current);
        }
        rayleigh = current;
        have_prev = true;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = hv[i] / norm;
    }
    if (converged) *converged = false;
    return std::fabs(rayleigh);
}

double hessian_spectral_norm(MarginFn& margin, const Tensor& x, const ScoreParams& params,
                             RngStream& rng) {
    if (!margin.model().twice_differentiable()) {
        throw std::invalid_argument(
            "hessian_spectral_norm: model has a relu activation; second-order scoring "
            "requires twice-differentiable activations");
    }
    double step = params.hvp_step * (1.0 + x.linf_norm());
    return spectral_norm_at(margin.graph(), x, params.power_iters, params.power_tol, step, rng);
}

TargetSet select_targets(const Model& model, const TransformSpec& spec, const Tensor& x0,
                         RngStream& rng) {
    Tensor z = model.logits(spec.apply(x0));
    const int K = static_cast<int>(z.size());
    const int c = argmax_lowest(z);

    TargetSet targets;
    int runner = -1;
    for (int i = 0; i < K; ++i) {
        if (i == c) continue;
        if (runner < 0 || z[static_cast<std::size_t>(i)] > z[static_cast<std::size_t>(runner)]) {
            runner = i;
        }
    }
    targets.runner_up = runner;

    int least = 0;
    for (int i = 1; i < K; ++i) {
        if (z[static_cast<std::size_t>(i)] < z[static_cast<std::size_t>(least)]) least = i;
    }
    targets.least_likely = least;

    auto pick = rng.uniform_int(static_cast<std::uint64_t>(K - 1));
    int random_target = static_cast<int>(pick);
    if (random_target >= c) ++random_target;  // uniform over classes != c
    targets.random = random_target;
    return targets;
}

ScoreResult clever_score(const Model& model, const TransformSpec& spec, const Tensor& x0,
                         int target, const ScoreParams& params, std::optional<int> label) {
    params.validate();
    const auto t_start = std::chrono::steady_clock::now();

    // BPDA convention: transform the evaluation point once, then run the
    // plain estimator around it. On quantizer fixed points this reduces to
    // the undefended pipeline exactly.
    const Tensor x0h = spec.apply(x0);
    const Tensor z = model.logits(x0h);
    const int c = argmax_lowest(z);
    if (label.has_value() && c != *label) {
        throw misclassified_input("input predicted as class " + std::to_string(c) +
                                  ", labeled " + std::to_string(*label));
    }
    if (target == c) {
        throw std::invalid_argument("clever_score: target equals the predicted class");
    }
    if (target < 0 || static_cast<std::size_t>(target) >= model.num_classes()) {
        throw std::invalid_argument("clever_score: target class out of range");
    }

    ScoreResult result;
    result.order = params.order;
    result.true_class = c;
    result.target_class = target;
    result.gamma = z[static_cast<std::size_t>(c)] - z[static_cast<std::size_t>(target)];

    MarginFn margin(model, c, target);
    const double radius = params.plan.radius;

    if (params.order == ScoreOrder::first) {
        auto grad_norm = [&margin](const Tensor& x) { return margin.gradient(x).l2_norm(); };
        MaxEstimate est = estimate_max(grad_norm, x0h, params.plan);
        result.lipschitz = est.estimate;
        result.fit = std::move(est.fit);
        result.score = first_order_score(result.gamma, result.lipschitz, radius);
    } else {
        if (!model.twice_differentiable()) {
            throw std::invalid_argument(
                "clever_score: second-order scoring rejected, model has a relu activation");
        }
        result.grad_norm = margin.gradient(x0h).l2_norm();
        auto hess_norm = [&](const Tensor& x) {
            // Start vector derived from the point's bits: keeps the value
            // function pure so batches can be evaluated in any order.
            RngStream point_rng(derive_seed(params.plan.seed, {0x48657373ULL, tensor_bits_hash(x)}));
            return hessian_spectral_norm(margin, x, params, point_rng);
        };
        MaxEstimate est = estimate_max(hess_norm, x0h, params.plan);
        result.hessian_norm = std::max(est.estimate, 0.0);
        result.fit = std::move(est.fit);
        BoundInputs bounds;
        bounds.gamma = result.gamma;
        bounds.grad_norm = result.grad_norm;
        bounds.hessian_norm = result.hessian_norm;
        result.score = second_order_score(bounds, radius);
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace clever
