#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "clever/rng.hpp"
#include "clever/tensor.hpp"

namespace clever {

// Block-maxima sampling plan over the l2 ball B(x0, R).
struct SamplePlan {
    int batches = 100;            // N_b
    int samples_per_batch = 200;  // N_s
    double radius = 2.0;          // R, in input units
    int norm_order = 2;           // p; only 2 is implemented, inf reserved
    std::uint64_t seed = 0;

    void validate() const;
};

// Fitted reverse-Weibull parameters. The distribution has support x <= mu,
// so the location doubles as the estimate of the sampled quantity's maximum.
struct EvtFit {
    double location = 0.0;  // mu
    double scale = 0.0;     // sigma
    double shape = 1.0;     // alpha
    double log_likelihood = 0.0;
    std::vector<double> block_maxima;
    bool degenerate = false;  // all maxima equal; mu pinned to that value
    bool converged = true;    // simplex hit its tolerance on the best start

    nlohmann::json to_json() const;
};

using ValueFn = std::function<double(const Tensor&)>;

// `count` points uniform in the l2 ball of radius R around `center`:
// isotropic direction times R * u^(1/d).
std::vector<Tensor> sample_ball(const Tensor& center, double radius, int count, RngStream& rng);

// Per-batch maxima of value_fn over fresh ball samples. Batches draw from
// disjoint substreams derived from (plan.seed, batch index), so the result
// is identical whether batches run serially or fanned out over workers.
std::vector<double> batch_maxima(const ValueFn& value_fn, const Tensor& center,
                                 const SamplePlan& plan, int workers = 1);

// Reverse-Weibull log-likelihood of `maxima` at (mu, sigma, alpha);
// -inf outside the domain mu > max(x), sigma > 0, alpha > 0.
double reverse_weibull_log_likelihood(const std::vector<double>& maxima, double location,
                                      double scale, double shape);

// Maximum-likelihood reverse-Weibull fit of block maxima. Optimized in the
// unconstrained reparameterization mu = max(x) + exp(m), sigma = exp(s),
// alpha = exp(a) by multi-start Nelder-Mead. Degenerate input (all maxima
// equal within 1e-12) short-circuits to mu = that value.
EvtFit fit_reverse_weibull(const std::vector<double>& maxima);

struct MaxEstimate {
    double estimate = 0.0;  // fit location
    EvtFit fit;
};

// Composition of batch_maxima and fit_reverse_weibull.
MaxEstimate estimate_max(const ValueFn& value_fn, const Tensor& center, const SamplePlan& plan,
                         int workers = 1);

}  // namespace clever
