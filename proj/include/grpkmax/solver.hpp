#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "grpkmax/model.hpp"
#include "grpkmax/prox.hpp"
#include "grpkmax/types.hpp"

namespace grpkmax {

enum class StepMode { unit, lipschitz };
enum class TerminationReason { tolerance, max_iters };

inline std::string to_string(StepMode mode) {
    return mode == StepMode::unit ? "unit" : "lipschitz";
}

inline std::string to_string(TerminationReason reason) {
    return reason == TerminationReason::tolerance ? "tolerance" : "max_iters";
}

struct SolveOptions {
    int max_iters = 500;
    double tol = 1e-4;
    StepMode step_mode = StepMode::lipschitz;
    bool record_trace = false;

    void validate() const {
        if (max_iters < 1) {
            throw std::invalid_argument("SolveOptions: max_iters must be >= 1");
        }
        if (!(tol > 0.0)) {
            throw std::invalid_argument("SolveOptions: tol must be > 0");
        }
    }
};

struct SolveResult {
    GroupedVector x;
    int iterations = 0;
    TerminationReason terminated_by = TerminationReason::max_iters;
    double gamma = 1.0;
    std::vector<double> objective_trace;
    std::vector<double> iterate_gap_trace;
    std::vector<Vector> iterate_trace;
    double wall_time = 0.0;
};

struct LipschitzEstimate {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest eigenvalue of the Gram matrix of the concatenated design,
/// by power iteration on v -> X^T (X v). Non-convergence within
/// `max_steps` is reported via the flag, with the best estimate kept.
inline LipschitzEstimate lipschitz_estimate(const GroupedDesign& design,
                                            double rel_tol = 1e-6,
                                            int max_steps = 1000) {
    const Index d = design.total_dim();
    std::mt19937_64 rng(0x6b6d6178u);  // fixed start for determinism
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector v(d);
    for (Index j = 0; j < d; ++j) v[j] = gauss(rng);
    v.normalize();

    LipschitzEstimate est;
    double prev = 0.0;
    for (int t = 1; t <= max_steps; ++t) {
        Vector z = detail::design_apply_transpose(design, detail::design_apply(design, v));
        est.value = v.dot(z);  // Rayleigh quotient, ||v|| = 1
        est.iterations = t;
        const double znorm = z.norm();
        if (znorm == 0.0) {
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        if (t > 1 && std::abs(est.value - prev) <= rel_tol * std::abs(est.value)) {
            est.converged = true;
            return est;
        }
        prev = est.value;
        v = z / znorm;
    }
    return est;
}

namespace detail {

// Slight step deflation so the descent guarantee survives the finite
// accuracy of the power-iteration estimate.
inline constexpr double kStepSafety = 1.001;

inline double resolve_gamma(const GroupedDesign& design, const SolveOptions& options) {
    if (options.step_mode == StepMode::unit) return 1.0;
    const LipschitzEstimate est = lipschitz_estimate(design);
    if (est.value <= 0.0) return 1.0;
    return 1.0 / (est.value * kStepSafety);
}

/// One application of the per-group shrinkage operator at threshold scale
/// gamma. `u` is the gradient-step point, updated in place.
inline void apply_shrink(const GroupedDesign& design, const PenaltySpec& penalty,
                         double gamma, Vector& u) {
    const GroupStructure& gs = design.structure();
    const double tau = gamma * penalty.lambda;
    switch (penalty.kind) {
        case PenaltyKind::lasso: {
            for (Index j = 0; j < u.size(); ++j) {
                u[j] = soft_threshold_scalar(u[j], tau);
            }
            return;
        }
        case PenaltyKind::group_lasso: {
            const auto w = penalty.effective_weights(gs);
            for (Index i = 0; i < gs.num_groups(); ++i) {
                auto seg = u.segment(gs.offset(i), gs.size(i));
                seg = block_shrink(seg, tau * w[static_cast<std::size_t>(i)]);
            }
            return;
        }
        case PenaltyKind::sparse_group_lasso: {
            const auto w = penalty.effective_weights(gs);
            const double tau_l1 = gamma * penalty.mu;
            for (Index i = 0; i < gs.num_groups(); ++i) {
                auto seg = u.segment(gs.offset(i), gs.size(i));
                seg = sparse_group_shrink(seg, tau * w[static_cast<std::size_t>(i)],
                                          tau_l1);
            }
            return;
        }
        case PenaltyKind::group_kmax: {
            for (Index i = 0; i < gs.num_groups(); ++i) {
                auto seg = u.segment(gs.offset(i), gs.size(i));
                seg = kmax_shrink(seg, penalty.k[static_cast<std::size_t>(i)], tau,
                                  penalty.full_k_mode);
            }
            return;
        }
    }
    throw std::invalid_argument("solve: unknown penalty kind");
}

inline SolveResult solve_impl(const GroupedDesign& design, const PenaltySpec& penalty,
                              const SolveOptions& options,
                              const std::optional<Vector>& x_init) {
    penalty.validate(design.structure());
    options.validate();
    const GroupStructure& gs = design.structure();
    const Vector& y = design.response();

    const auto t_start = std::chrono::steady_clock::now();
    const double gamma = resolve_gamma(design, options);

    Vector x;
    if (x_init) {
        if (x_init->size() != gs.total_dim()) {
            throw DimensionError("solve: warm-start size does not match design");
        }
        x = *x_init;
    } else {
        x = gamma * design_apply_transpose(design, y);
    }

    SolveResult result;
    result.x = GroupedVector(gs, x);
    result.gamma = gamma;
    const bool trace = options.record_trace;
    if (trace) {
        result.iterate_trace.push_back(x);
        result.objective_trace.push_back(
            objective(design, GroupedVector(gs, x), penalty));
    }

    int t = 0;
    for (t = 1; t <= options.max_iters; ++t) {
        const Vector r = y - design_apply(design, x);
        Vector next = x + gamma * design_apply_transpose(design, r);
        apply_shrink(design, penalty, gamma, next);
        if (!next.allFinite()) {
            throw DivergenceError("solve: non-finite iterate at iteration " +
                                  std::to_string(t));
        }
        double gap = 0.0;
        for (Index i = 0; i < gs.num_groups(); ++i) {
            gap += (next.segment(gs.offset(i), gs.size(i)) -
                    x.segment(gs.offset(i), gs.size(i)))
                       .norm();
        }
        x = std::move(next);
        if (trace) {
            result.iterate_trace.push_back(x);
            result.iterate_gap_trace.push_back(gap);
            result.objective_trace.push_back(
                objective(design, GroupedVector(gs, x), penalty));
        }
        if (gap <= options.tol) {
            result.terminated_by = TerminationReason::tolerance;
            break;
        }
    }
    if (t > options.max_iters) {
        result.iterations = options.max_iters;
        result.terminated_by = TerminationReason::max_iters;
    } else {
        result.iterations = t;
    }
    result.x = GroupedVector(gs, std::move(x));
    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    return result;
}

}  // namespace detail

/// Iterative soft thresholding for all four penalty kinds. Starts from
/// gamma * X^T y and stops once the summed per-group iterate gap falls
/// to `tol` or `max_iters` is reached.
inline SolveResult solve(const GroupedDesign& design, const PenaltySpec& penalty,
                         const SolveOptions& options = {}) {
    return detail::solve_impl(design, penalty, options, std::nullopt);
}

/// One solve per lambda, in the given order. Each solve after the first
/// starts from the previous solution unless `warm_start` is false.
inline std::vector<SolveResult> solve_path(const GroupedDesign& design,
                                           const PenaltySpec& penalty_template,
                                           const std::vector<double>& lambdas,
                                           const SolveOptions& options = {},
                                           bool warm_start = true) {
    if (lambdas.empty()) {
        throw std::invalid_argument("solve_path: empty lambda list");
    }
    for (double l : lambdas) {
        if (!(l >= 0.0)) {
            throw std::invalid_argument("solve_path: lambdas must be >= 0");
        }
    }
    std::vector<SolveResult> results;
    results.reserve(lambdas.size());
    std::optional<Vector> init;
    for (double l : lambdas) {
        PenaltySpec spec = penalty_template;
        spec.lambda = l;
        results.push_back(detail::solve_impl(design, spec, options, init));
        if (warm_start) init = results.back().x.flat();
    }
    return results;
}

}  // namespace grpkmax
