#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "clever/evt.hpp"
#include "clever/graph.hpp"
#include "clever/model.hpp"
#include "clever/rng.hpp"
#include "clever/transform.hpp"

namespace clever {

enum class ScoreOrder { first, second };

ScoreOrder score_order_from_name(const std::string& name);
const char* score_order_name(ScoreOrder order);

struct ScoreParams {
    ScoreOrder order = ScoreOrder::first;
    SamplePlan plan;          // plan.radius is both the sampling ball and the score cap
    int power_iters = 200;    // power-iteration budget per sampled point
    double power_tol = 1e-6;  // relative Rayleigh-quotient change at convergence
    double hvp_step = 1e-4;   // base step, scaled by (1 + |x|_inf) per point

    void validate() const;
};

// Scalars entering the robustness bounds: gamma = g_t(x0),
// b = |grad g_t(x0)|_2, a = estimated max Hessian spectral norm over the
// ball, lipschitz = estimated max gradient norm over the ball.
struct BoundInputs {
    double gamma = 0.0;
    double grad_norm = 0.0;     // b
    double hessian_norm = 0.0;  // a
    double lipschitz = 0.0;     // L
};

// First-order bound: min(gamma / L, R). L == 0 means the margin is constant
// in the ball, so no adversary exists within R.
double first_order_score(double gamma, double lipschitz, double radius);

// Second-order bound: min((-b + sqrt(b^2 + 2 a gamma)) / a, R), with the
// analytic a -> 0 limit gamma / b as fallback.
double second_order_score(const BoundInputs& bounds, double radius);

// Largest-magnitude Hessian eigenvalue of a scalar-output graph at x, via
// power iteration on Hessian-vector products. Equals the spectral norm for
// the symmetric Hessian. Returns 0 immediately on a zero Hessian; on a
// stalled iteration returns the last Rayleigh magnitude and clears
// *converged.
double spectral_norm_at(Graph& graph, const Tensor& x, int max_iters, double tol,
                        double hvp_step, RngStream& rng, bool* converged = nullptr);

double hessian_spectral_norm(MarginFn& margin, const Tensor& x, const ScoreParams& params,
                             RngStream& rng);

struct TargetSet {
    int runner_up = 0;
    int random = 0;
    int least_likely = 0;
};

// The three attack target classes evaluated per input, chosen on the
// defended model's logits at x0.
TargetSet select_targets(const Model& model, const TransformSpec& spec, const Tensor& x0,
                         RngStream& rng);

// Raised when an input's defended prediction disagrees with its label;
// callers skip such inputs.
struct misclassified_input : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScoreResult {
    ScoreOrder order = ScoreOrder::first;
    int true_class = 0;    // defended prediction at x0
    int target_class = 0;
    double gamma = 0.0;
    double lipschitz = 0.0;     // first order only
    double grad_norm = 0.0;     // second order only (b)
    double hessian_norm = 0.0;  // second order only (a)
    double score = 0.0;
    EvtFit fit;
    double wall_seconds = 0.0;
};

// CLEVER score of x0 against target class t. The transform is applied to x0
// once and the estimate samples the ball around the transformed point; see
// README for the BPDA sampling convention. Passing `label` enables the
// misclassification skip check.
ScoreResult clever_score(const Model& model, const TransformSpec& spec, const Tensor& x0,
                         int target, const ScoreParams& params, std::optional<int> label = {});

}  // namespace clever
