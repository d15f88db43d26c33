#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "grpkmax/model.hpp"
#include "grpkmax/prox.hpp"
#include "grpkmax/types.hpp"

namespace grpkmax {

/// Outcome of the local-optimality checks for a group-kmax candidate.
/// `strict_gap[i]` is the margin by which group i's smallest protected
/// magnitude clears its penalization boundary plus gamma*lambda; the gap
/// is +inf and flagged vacuous when the group has no unpenalized set to
/// separate from (k = 0, all top entries tied, or unpenalized k = d).
struct OptimalityReport {
    double stationary_gap = 0.0;
    std::vector<double> strict_gap;
    std::vector<bool> gap_vacuous;
    std::vector<bool> ties_at_threshold;
    bool fixed_point_ok = false;
    bool strict_gap_ok = false;
    std::optional<bool> perturbation_ok;
    double gamma = 1.0;
    double margin = 0.0;
    double fp_tolerance = 0.0;
};

namespace detail {

inline void require_group_kmax(const PenaltySpec& penalty, const char* what) {
    if (penalty.kind != PenaltyKind::group_kmax) {
        throw std::invalid_argument(std::string(what) +
                                    ": penalty kind must be group-kmax");
    }
}

inline Vector gradient_step_point(const GroupedDesign& design,
                                  const GroupedVector& x, double gamma) {
    const Vector r = design.response() - design_apply(design, x.flat());
    return x.flat() + gamma * design_apply_transpose(design, r);
}

}  // namespace detail

/// Distance of x from one application of the shrinkage fixed-point map,
/// summed over groups: sum_i ||x_i - Shrink(x_i + gamma*X_i^T r)||_2.
inline double stationary_residual(const GroupedDesign& design, const GroupedVector& x,
                                  const PenaltySpec& penalty, double gamma) {
    detail::require_group_kmax(penalty, "stationary_residual");
    penalty.validate(design.structure());
    if (!(x.structure() == design.structure())) {
        throw DimensionError("stationary_residual: structure mismatch");
    }
    const GroupStructure& gs = design.structure();
    const Vector u = detail::gradient_step_point(design, x, gamma);
    const double tau = gamma * penalty.lambda;
    double gap = 0.0;
    for (Index i = 0; i < gs.num_groups(); ++i) {
        const Vector ui = u.segment(gs.offset(i), gs.size(i));
        const Vector si =
            kmax_shrink(ui, penalty.k[static_cast<std::size_t>(i)], tau,
                        penalty.full_k_mode);
        gap += (x.block(i) - si).norm();
    }
    return gap;
}

/// Evaluates the fixed-point condition and the per-group strict gap
/// t_k^+ > t_k + gamma*lambda on u* = x + gamma*X^T(y - Xx). Thresholds
/// use the step actually iterated, so certification matches the solver.
inline OptimalityReport check_local_optimality(const GroupedDesign& design,
                                       const GroupedVector& x,
                                       const PenaltySpec& penalty, double gamma,
                                       double margin = 1e-10,
                                       double fp_tol = 1e-6) {
    detail::require_group_kmax(penalty, "check_local_optimality");
    penalty.validate(design.structure());
    if (!(x.structure() == design.structure())) {
        throw DimensionError("check_local_optimality: structure mismatch");
    }
    const GroupStructure& gs = design.structure();
    const Vector u = detail::gradient_step_point(design, x, gamma);
    const double tau = gamma * penalty.lambda;
    constexpr double inf = std::numeric_limits<double>::infinity();

    OptimalityReport report;
    report.gamma = gamma;
    report.margin = margin;
    report.fp_tolerance = fp_tol;
    report.strict_gap_ok = true;

    for (Index i = 0; i < gs.num_groups(); ++i) {
        const Index ki = penalty.k[static_cast<std::size_t>(i)];
        const Vector ui = u.segment(gs.offset(i), gs.size(i));
        const IndexPartition part = partition_indices(ui, ki, penalty.full_k_mode);

        const Vector si = [&] {
            Vector out = ui;
            for (Index j : part.leq) out[j] = soft_threshold_scalar(ui[j], tau);
            return out;
        }();
        report.stationary_gap += (x.block(i) - si).norm();

        const bool unpenalized_full_k =
            ki == gs.size(i) && penalty.full_k_mode == FullKMode::unpenalized;
        if (unpenalized_full_k || part.plus.empty()) {
            report.strict_gap.push_back(inf);
            report.gap_vacuous.push_back(true);
            report.ties_at_threshold.push_back(false);
            continue;
        }
        double t_plus = inf;
        for (Index j : part.plus) t_plus = std::min(t_plus, std::abs(ui[j]));
        report.strict_gap.push_back(t_plus - part.threshold - tau);
        report.gap_vacuous.push_back(false);
        report.ties_at_threshold.push_back(part.eq.size() > 1);
        if (!(report.strict_gap.back() > margin)) {
            report.strict_gap_ok = false;
        }
    }
    report.fixed_point_ok = report.stationary_gap <= fp_tol;
    return report;
}

/// Samples perturbations uniformly in the radius ball and reports whether
/// the objective never drops below objective(x) - 1e-12. Deterministic
/// for a given seed.
inline bool perturbation_oracle(const GroupedDesign& design, const GroupedVector& x,
                                const PenaltySpec& penalty, double radius,
                                int samples, std::uint64_t seed) {
    penalty.validate(design.structure());
    if (!(x.structure() == design.structure())) {
        throw DimensionError("perturbation_oracle: structure mismatch");
    }
    if (!(radius > 0.0)) {
        throw std::invalid_argument("perturbation_oracle: radius must be > 0");
    }
    if (samples < 1) {
        throw std::invalid_argument("perturbation_oracle: samples must be >= 1");
    }
    const Index d = design.total_dim();
    const double base = objective(design, x, penalty);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int s = 0; s < samples; ++s) {
        Vector delta(d);
        for (Index j = 0; j < d; ++j) delta[j] = gauss(rng);
        const double nrm = delta.norm();
        if (nrm == 0.0) continue;
        const double scale =
            radius * std::pow(unif(rng), 1.0 / static_cast<double>(d)) / nrm;
        delta *= scale;
        const GroupedVector xp(x.structure(), x.flat() + delta);
        if (objective(design, xp, penalty) < base - 1e-12) {
            return false;
        }
    }
    return true;
}

}  // namespace grpkmax
