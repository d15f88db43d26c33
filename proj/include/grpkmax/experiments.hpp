#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "grpkmax/model.hpp"
#include "grpkmax/solver.hpp"
#include "grpkmax/types.hpp"

namespace grpkmax {

/// Synthetic benchmark protocol: m groups of d_per_group columns with
/// standard-normal entries, ground truth with s[i] entries of value +/-1
/// per group, and additive Gaussian noise.
struct SyntheticConfig {
    Index n = 200;
    Index m = 10;
    Index d_per_group = 10;
    std::vector<Index> s = {10, 8, 6, 4, 2, 1, 0, 0, 0, 0};
    double noise_variance = 4.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 1 || m < 1 || d_per_group < 1) {
            throw std::invalid_argument("SyntheticConfig: n, m, d must be >= 1");
        }
        if (static_cast<Index>(s.size()) != m) {
            throw std::invalid_argument(
                "SyntheticConfig: s has " + std::to_string(s.size()) +
                " entries for " + std::to_string(m) + " groups");
        }
        for (Index si : s) {
            if (si < 0 || si > d_per_group) {
                throw std::invalid_argument(
                    "SyntheticConfig: s entries must lie in [0, d_per_group]");
            }
        }
        if (!(noise_variance >= 0.0)) {
            throw std::invalid_argument("SyntheticConfig: negative noise variance");
        }
    }
};

struct SyntheticInstance {
    GroupedDesign design;
    GroupedVector truth;
};

/// Draw order is fixed: per group the design entries (column-major), then
/// per group the support positions and signs, then the noise vector.
inline SyntheticInstance gen_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Matrix> groups;
    groups.reserve(static_cast<std::size_t>(cfg.m));
    for (Index i = 0; i < cfg.m; ++i) {
        Matrix phi(cfg.n, cfg.d_per_group);
        for (Index j = 0; j < cfg.d_per_group; ++j) {
            for (Index r = 0; r < cfg.n; ++r) phi(r, j) = gauss(rng);
        }
        groups.push_back(std::move(phi));
    }

    GroupStructure gs = GroupStructure::uniform(cfg.m, cfg.d_per_group);
    Vector truth_flat = Vector::Zero(gs.total_dim());
    for (Index i = 0; i < cfg.m; ++i) {
        const Index si = cfg.s[static_cast<std::size_t>(i)];
        std::vector<Index> idx(static_cast<std::size_t>(cfg.d_per_group));
        std::iota(idx.begin(), idx.end(), Index{0});
        // partial Fisher-Yates: the first si slots become the support
        for (Index j = 0; j < si; ++j) {
            std::uniform_int_distribution<Index> pick(j, cfg.d_per_group - 1);
            std::swap(idx[static_cast<std::size_t>(j)],
                      idx[static_cast<std::size_t>(pick(rng))]);
        }
        std::uniform_int_distribution<int> sign(0, 1);
        for (Index j = 0; j < si; ++j) {
            truth_flat[gs.offset(i) + idx[static_cast<std::size_t>(j)]] =
                sign(rng) == 0 ? -1.0 : 1.0;
        }
    }
    GroupedVector truth(gs, std::move(truth_flat));

    Vector y = Vector::Zero(cfg.n);
    for (Index i = 0; i < cfg.m; ++i) {
        y.noalias() += groups[static_cast<std::size_t>(i)] * truth.block(i);
    }
    if (cfg.noise_variance > 0.0) {
        std::normal_distribution<double> noise(0.0, std::sqrt(cfg.noise_variance));
        for (Index r = 0; r < cfg.n; ++r) y[r] += noise(rng);
    }

    return SyntheticInstance{GroupedDesign(std::move(groups), std::move(y)),
                             std::move(truth)};
}

/// Relative coefficient error in percent: 100 * ||est - truth|| / ||truth||.
inline double rmse_pct(const GroupedVector& est, const GroupedVector& truth) {
    if (!(est.structure() == truth.structure())) {
        throw DimensionError("rmse_pct: structure mismatch");
    }
    const double denom = truth.flat().norm();
    if (denom == 0.0) {
        throw std::invalid_argument("rmse_pct: truth has zero norm");
    }
    return 100.0 * (est.flat() - truth.flat()).norm() / denom;
}

/// Recall over the true support, in percent: the fraction of truth's
/// nonzero positions where |est| exceeds tol.
inline double cpr_pct(const GroupedVector& est, const GroupedVector& truth,
                      double tol = 1e-6) {
    if (!(est.structure() == truth.structure())) {
        throw DimensionError("cpr_pct: structure mismatch");
    }
    Index support = 0;
    Index hit = 0;
    for (Index j = 0; j < truth.flat().size(); ++j) {
        if (truth.flat()[j] != 0.0) {
            ++support;
            if (std::abs(est.flat()[j]) > tol) ++hit;
        }
    }
    if (support == 0) {
        throw std::invalid_argument("cpr_pct: truth has no nonzero entries");
    }
    return 100.0 * static_cast<double>(hit) / static_cast<double>(support);
}

struct SparsityStats {
    Index nnz_overall = 0;
    Index nnz_groups = 0;
};

inline SparsityStats sparsity_stats(const GroupedVector& x, double tol = 1e-6) {
    if (!(tol >= 0.0)) {
        throw std::invalid_argument("sparsity_stats: negative tol");
    }
    SparsityStats stats;
    for (Index i = 0; i < x.structure().num_groups(); ++i) {
        Index in_group = 0;
        const auto block = x.block(i);
        for (Index j = 0; j < block.size(); ++j) {
            if (std::abs(block[j]) > tol) ++in_group;
        }
        stats.nnz_overall += in_group;
        if (in_group > 0) ++stats.nnz_groups;
    }
    return stats;
}

/// One benchmark measurement: metrics plus the hyperparameters they were
/// obtained with.
struct MetricsRecord {
    double rmse_pct = 0.0;
    double cpr_pct = 0.0;
    Index nnz_overall = 0;
    Index nnz_groups = 0;
    double wall_time = 0.0;
    PenaltySpec hyperparams;
};

struct CvCell {
    double lambda = 0.0;
    double mu = 0.0;
    double mean_error = 0.0;
};

struct CvResult {
    PenaltySpec best;
    std::vector<CvCell> cells;
    std::vector<Index> fold_of_row;
};

namespace detail {

inline GroupedDesign subset_rows(const GroupedDesign& design,
                                 const std::vector<Index>& rows) {
    std::vector<Matrix> groups;
    groups.reserve(static_cast<std::size_t>(design.num_groups()));
    for (Index i = 0; i < design.num_groups(); ++i) {
        Matrix sub(static_cast<Index>(rows.size()), design.group(i).cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            sub.row(static_cast<Index>(r)) = design.group(i).row(rows[r]);
        }
        groups.push_back(std::move(sub));
    }
    Vector y(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        y[static_cast<Index>(r)] = design.response()[rows[r]];
    }
    return GroupedDesign(std::move(groups), std::move(y));
}

}  // namespace detail

/// K-fold cross-validation over a lambda grid (and a mu grid for sparse
/// group lasso). Rows are shuffled once by seed, split into contiguous
/// blocks, and each cell is scored by the mean held-out squared
/// prediction error. Ties go to the larger lambda.
inline CvResult cross_validate(const GroupedDesign& design,
                               const PenaltySpec& penalty_template,
                               const std::vector<double>& lambda_grid,
                               const std::vector<double>& mu_grid, int folds,
                               std::uint64_t seed,
                               const SolveOptions& options = {}) {
    const Index n = design.rows();
    if (folds < 2) {
        throw std::invalid_argument("cross_validate: folds must be >= 2");
    }
    if (folds > n) {
        throw std::invalid_argument("cross_validate: folds exceed row count");
    }
    if (lambda_grid.empty()) {
        throw std::invalid_argument("cross_validate: empty lambda grid");
    }
    for (double l : lambda_grid) {
        if (!(l >= 0.0)) {
            throw std::invalid_argument("cross_validate: lambdas must be >= 0");
        }
    }
    if (!mu_grid.empty() &&
        penalty_template.kind != PenaltyKind::sparse_group_lasso) {
        throw std::invalid_argument(
            "cross_validate: mu grid applies to sparse-group-lasso only");
    }
    const std::vector<double> mus =
        mu_grid.empty() ? std::vector<double>{penalty_template.mu} : mu_grid;

    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    CvResult result;
    result.fold_of_row.assign(static_cast<std::size_t>(n), Index{0});
    const Index base = n / folds;
    const Index extra = n % folds;
    Index pos = 0;
    for (Index f = 0; f < folds; ++f) {
        const Index len = base + (f < extra ? 1 : 0);
        for (Index r = 0; r < len; ++r) {
            result.fold_of_row[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos + r)])] = f;
        }
        pos += len;
    }

    std::vector<std::vector<double>> err(
        mus.size(), std::vector<double>(lambda_grid.size(), 0.0));
    for (Index f = 0; f < folds; ++f) {
        std::vector<Index> train_rows;
        std::vector<Index> test_rows;
        for (Index r = 0; r < n; ++r) {
            if (result.fold_of_row[static_cast<std::size_t>(r)] == f) {
                test_rows.push_back(r);
            } else {
                train_rows.push_back(r);
            }
        }
        const GroupedDesign train = detail::subset_rows(design, train_rows);
        const GroupedDesign test = detail::subset_rows(design, test_rows);
        for (std::size_t mi = 0; mi < mus.size(); ++mi) {
            PenaltySpec tmpl = penalty_template;
            tmpl.mu = mus[mi];
            const auto path = solve_path(train, tmpl, lambda_grid, options, true);
            for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
                const Vector pred =
                    detail::design_apply(test, path[li].x.flat());
                err[mi][li] += (test.response() - pred).squaredNorm() /
                               static_cast<double>(test.rows());
            }
        }
    }

    double best_err = std::numeric_limits<double>::infinity();
    double best_lambda = -1.0;
    std::size_t best_mi = 0;
    for (std::size_t mi = 0; mi < mus.size(); ++mi) {
        for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
            const double mean_err = err[mi][li] / static_cast<double>(folds);
            result.cells.push_back(CvCell{lambda_grid[li], mus[mi], mean_err});
            const bool better =
                mean_err < best_err ||
                (mean_err == best_err && lambda_grid[li] > best_lambda);
            if (better) {
                best_err = mean_err;
                best_lambda = lambda_grid[li];
                best_mi = mi;
            }
        }
    }
    result.best = penalty_template;
    result.best.lambda = best_lambda;
    result.best.mu = mus[best_mi];
    return result;
}

/// Default lambda grid for support-size estimation. Deliberately spans
/// only the sparse upper range of the path: prediction-minimizing CV
/// drifts toward dense fits, which is the wrong bias when the output is
/// a support-size prior rather than a predictor.
inline std::vector<double> init_lambda_grid(const GroupedDesign& design) {
    const double ref =
        detail::design_apply_transpose(design, design.response())
            .cwiseAbs()
            .maxCoeff();
    return {0.5 * ref, 0.4 * ref, 0.3 * ref, 0.25 * ref, 0.2 * ref};
}

/// Per-group k chosen from the support sizes of a cross-validated lasso
/// fit, clamped to [0, d_i].
inline std::vector<Index> init_k_from_lasso(const GroupedDesign& design,
                                            const std::vector<double>& lambda_grid,
                                            int cv_folds, std::uint64_t seed,
                                            const SolveOptions& options = {},
                                            double nnz_tol = 1e-6) {
    const CvResult cv = cross_validate(design, PenaltySpec::lasso(0.0), lambda_grid,
                                       {}, cv_folds, seed, options);
    const SolveResult fit = solve(design, cv.best, options);
    const GroupStructure& gs = design.structure();
    std::vector<Index> k;
    k.reserve(static_cast<std::size_t>(gs.num_groups()));
    for (Index i = 0; i < gs.num_groups(); ++i) {
        Index nnz = 0;
        const auto block = fit.x.block(i);
        for (Index j = 0; j < block.size(); ++j) {
            if (std::abs(block[j]) > nnz_tol) ++nnz;
        }
        k.push_back(std::clamp(nnz, Index{0}, gs.size(i)));
    }
    return k;
}

}  // namespace grpkmax
