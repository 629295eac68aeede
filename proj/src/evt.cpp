#include "clever/evt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "clever/optim.hpp"

namespace clever {

void SamplePlan::validate() const {
    if (batches < 2) throw std::invalid_argument("sample plan: batches must be >= 2");
    if (samples_per_batch < 1) {
        throw std::invalid_argument("sample plan: samples_per_batch must be >= 1");
    }
    if (!(radius > 0.0)) throw std::invalid_argument("sample plan: radius must be positive");
    if (norm_order != 2) {
        throw std::invalid_argument("sample plan: only the l2 ball is implemented");
    }
}

std::vector<Tensor> sample_ball(const Tensor& center, double radius, int count, RngStream& rng) {
    if (!(radius > 0.0)) throw std::invalid_argument("sample_ball: radius must be positive");
    const std::size_t d = center.size();
    std::vector<Tensor> points;
    points.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Tensor dir = rng.unit_vector(d);
        double r = radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
        Tensor p = center;
        axpy(r, dir, p);
        points.push_back(std::move(p));
    }
    return points;
}

namespace {

double one_batch_max(const ValueFn& value_fn, const Tensor& center, const SamplePlan& plan,
                     int batch_index) {
    RngStream rng(derive_seed(plan.seed, {static_cast<std::uint64_t>(batch_index)}));
    const std::size_t d = center.size();
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < plan.samples_per_batch; ++s) {
        Tensor dir = rng.unit_vector(d);
        double r = plan.radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
        Tensor p = center;
        axpy(r, dir, p);
        double v = value_fn(p);
        if (!std::isfinite(v)) {
            throw std::runtime_error("batch_maxima: non-finite value at batch " +
                                     std::to_string(batch_index) + ", sample " +
                                     std::to_string(s));
        }
        best = std::max(best, v);
    }
    return best;
}

}  // namespace

std::vector<double> batch_maxima(const ValueFn& value_fn, const Tensor& center,
                                 const SamplePlan& plan, int workers) {
    plan.validate();
    std::vector<double> maxima(static_cast<std::size_t>(plan.batches));
    if (workers <= 1) {
        for (int b = 0; b < plan.batches; ++b) {
            maxima[static_cast<std::size_t>(b)] = one_batch_max(value_fn, center, plan, b);
        }
        return maxima;
    }

    // value_fn must be pure with respect to shared state here.
    std::vector<std::future<void>> tasks;
    std::atomic<int> next{0};
    tasks.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        tasks.push_back(std::async(std::launch::async, [&]() {
            for (;;) {
                int b = next.fetch_add(1);
                if (b >= plan.batches) return;
                maxima[static_cast<std::size_t>(b)] = one_batch_max(value_fn, center, plan, b);
            }
        }));
    }
    for (auto& t : tasks) t.get();  // rethrows the first failure
    return maxima;
}

double reverse_weibull_log_likelihood(const std::vector<double>& maxima, double location,
                                      double scale, double shape) {
    if (!(scale > 0.0) || !(shape > 0.0)) return -std::numeric_limits<double>::infinity();
    double ll = 0.0;
    const double log_scale = std::log(scale);
    const double log_shape = std::log(shape);
    for (double x : maxima) {
        double gap = location - x;
        if (!(gap > 0.0)) return -std::numeric_limits<double>::infinity();
        double z = gap / scale;
        ll += log_shape - shape * log_scale + (shape - 1.0) * std::log(gap) -
              std::pow(z, shape);
    }
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
}

EvtFit fit_reverse_weibull(const std::vector<double>& maxima) {
    if (maxima.size() < 2) {
        throw std::invalid_argument("fit_reverse_weibull: need at least 2 maxima");
    }
    for (double x : maxima) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("fit_reverse_weibull: non-finite maximum");
        }
    }

    EvtFit fit;
    fit.block_maxima = maxima;

    const double top = *std::max_element(maxima.begin(), maxima.end());
    const double bottom = *std::min_element(maxima.begin(), maxima.end());
    if (top - bottom <= 1e-12) {
        fit.location = top;
        fit.scale = 0.0;
        fit.shape = 1.0;
        fit.log_likelihood = 0.0;
        fit.degenerate = true;
        return fit;
    }

    double mean = 0.0;
    for (double x : maxima) mean += x;
    mean /= static_cast<double>(maxima.size());
    double var = 0.0;
    for (double x : maxima) var += (x - mean) * (x - mean);
    var /= static_cast<double>(maxima.size());
    const double sd = std::sqrt(var);

    // Unconstrained parameters (m, s, a):
    //   mu = top + exp(m), sigma = exp(s), alpha = exp(a).
    auto negative_ll = [&](const std::vector<double>& p) {
        double mu = top + std::exp(p[0]);
        double sigma = std::exp(p[1]);
        double alpha = std::exp(p[2]);
        return -reverse_weibull_log_likelihood(maxima, mu, sigma, alpha);
    };

    const double offset0 = std::max(0.1 * sd, 1e-6);
    const double sigma0 = std::max(sd, 1e-12);
    const std::vector<double> shape_starts = {1.0, 3.0, 0.5};

    SimplexOptions options;
    options.max_iterations = 2000;
    options.diameter_tolerance = 1e-9;

    bool have_best = false;
    SimplexResult best;
    for (double alpha0 : shape_starts) {
        std::vector<double> start = {std::log(offset0), std::log(sigma0), std::log(alpha0)};
        SimplexResult r = nelder_mead_minimize(negative_ll, std::move(start), options);
        if (!std::isfinite(r.value)) continue;
        if (!have_best || r.value < best.value) {
            best = std::move(r);
            have_best = true;
        }
    }

    if (!have_best) {
        // Every start collapsed to an infeasible region; report the moment
        // seed as a non-converged fit rather than aborting the pipeline.
        fit.location = top + offset0;
        fit.scale = sigma0;
        fit.shape = 1.0;
        fit.log_likelihood =
            reverse_weibull_log_likelihood(maxima, fit.location, fit.scale, fit.shape);
        fit.converged = false;
        return fit;
    }

    fit.location = top + std::exp(best.point[0]);
    fit.scale = std::exp(best.point[1]);
    fit.shape = std::exp(best.point[2]);
    fit.log_likelihood = -best.value;
    fit.converged = best.converged;
    return fit;
}

MaxEstimate estimate_max(const ValueFn& value_fn, const Tensor& center, const SamplePlan& plan,
                         int workers) {
    MaxEstimate out;
    out.fit = fit_reverse_weibull(batch_maxima(value_fn, center, plan, workers));
    out.estimate = out.fit.location;
    return out;
}

nlohmann::json EvtFit::to_json() const {
    return nlohmann::json{{"location", location},
                          {"scale", scale},
                          {"shape", shape},
                          {"log_likelihood", log_likelihood},
                          {"degenerate", degenerate},
                          {"converged", converged},
                          {"block_maxima", block_maxima}};
}

}  // namespace clever
