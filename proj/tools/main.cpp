// Command-line harness: synthetic benchmarks, dataset fitting,
// regularization paths, and local-optimality checks.
//
// Exit codes: 0 success, 2 input parse error, 3 dimension/structure
// mismatch, 4 numerical divergence, 1 other failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grpkmax/grpkmax.hpp"
#include "io_util.hpp"

namespace fs = std::filesystem;
using cli::fmt;
using cli::json;
using namespace grpkmax;

namespace {

constexpr const char* kMethods[] = {"lasso", "grouplasso", "sparsegrouplasso",
                                    "grpkmax", "grpkmax-prior"};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return splitmix64(base ^ splitmix64((a << 32) ^ b));
}

void check_method_name(const std::string& method) {
    for (const char* m : kMethods) {
        if (method == m) return;
    }
    throw std::invalid_argument("unknown method '" + method + "'");
}

StepMode parse_step(const std::string& s) {
    if (s == "unit") return StepMode::unit;
    if (s == "lipschitz") return StepMode::lipschitz;
    throw std::invalid_argument("unknown step mode '" + s + "'");
}

FullKMode parse_full_k(const std::string& s) {
    if (s == "literal") return FullKMode::literal;
    if (s == "unpenalized") return FullKMode::unpenalized;
    throw std::invalid_argument("unknown full-k mode '" + s + "'");
}

/// Shared solver flags.
struct SolverFlags {
    int max_iters = 500;
    double tol = 1e-4;
    std::string step = "lipschitz";

    SolveOptions options() const {
        SolveOptions opts;
        opts.max_iters = max_iters;
        opts.tol = tol;
        opts.step_mode = parse_step(step);
        return opts;
    }
};

void to_json(json& j, const SolverFlags& f) {
    j = json{{"max_iters", f.max_iters}, {"tol", f.tol}, {"step", f.step}};
}
void from_json(const json& j, SolverFlags& f) {
    j.at("max_iters").get_to(f.max_iters);
    j.at("tol").get_to(f.tol);
    j.at("step").get_to(f.step);
}

/// Lambda grid: explicit values win; otherwise ratios of the data-scaled
/// reference max_j |X_j^T y| (the smallest all-zeroing lasso level).
struct LambdaGridFlags {
    std::vector<double> values;
    std::vector<double> ratios;  // empty -> default geometric ratios

    std::vector<double> resolve(const GroupedDesign& design) const {
        if (!values.empty()) return values;
        std::vector<double> r = ratios;
        if (r.empty()) {
            for (int g = 0; g < 10; ++g) {
                r.push_back(0.5 * std::pow(1e-3 / 0.5, g / 9.0));
            }
        }
        const double ref =
            detail::design_apply_transpose(design, design.response())
                .cwiseAbs()
                .maxCoeff();
        std::vector<double> grid;
        grid.reserve(r.size());
        for (double ratio : r) grid.push_back(ratio * ref);
        return grid;
    }
};

void to_json(json& j, const LambdaGridFlags& f) {
    j = json{{"values", f.values}, {"ratios", f.ratios}};
}
void from_json(const json& j, LambdaGridFlags& f) {
    j.at("values").get_to(f.values);
    j.at("ratios").get_to(f.ratios);
}

std::vector<double> default_mu_grid() { return {0.5, 0.6, 0.7, 0.8, 0.9, 1.0}; }

/// Fit one method end to end: cross-validate the grids when they have
/// more than one cell, then solve on the full data.
struct FitOutcome {
    PenaltySpec spec;
    SolveResult result;
    std::vector<CvCell> cv_cells;
};

FitOutcome fit_method(const GroupedDesign& design, const std::string& method,
                      const std::vector<double>& lambda_grid,
                      const std::vector<double>& mu_grid,
                      const std::vector<Index>& k_fixed, FullKMode full_k,
                      int folds, std::uint64_t seed, const SolveOptions& opts) {
    check_method_name(method);
    PenaltySpec tmpl;
    std::vector<double> mus;
    if (method == "lasso") {
        tmpl = PenaltySpec::lasso(0.0);
    } else if (method == "grouplasso") {
        tmpl = PenaltySpec::group_lasso(0.0);
    } else if (method == "sparsegrouplasso") {
        mus = mu_grid.empty() ? default_mu_grid() : mu_grid;
        tmpl = PenaltySpec::sparse_group_lasso(0.0, mus.front());
    } else {
        std::vector<Index> k = k_fixed;
        if (k.empty()) {
            k = init_k_from_lasso(design, init_lambda_grid(design), folds,
                                  splitmix64(seed ^ 0x6bULL), opts);
        }
        tmpl = PenaltySpec::group_kmax(0.0, std::move(k), full_k);
    }

    FitOutcome outcome;
    if (lambda_grid.size() == 1 && mus.size() <= 1) {
        outcome.spec = tmpl;
        outcome.spec.lambda = lambda_grid.front();
    } else {
        CvResult cv = cross_validate(design, tmpl, lambda_grid,
                                     mus.size() > 1 ? mus : std::vector<double>{},
                                     folds, seed, opts);
        outcome.spec = cv.best;
        outcome.cv_cells = std::move(cv.cells);
    }
    outcome.result = solve(design, outcome.spec, opts);
    return outcome;
}

// ---------------------------------------------------------------------------
// synth

struct SynthConfig {
    std::vector<Index> m_list = {10};
    Index n = 200;
    Index d = 10;
    std::vector<Index> s;  // empty -> default pattern
    double noise_var = 4.0;
    int repeats = 20;
    std::uint64_t seed = 0;
    std::vector<std::string> methods = {"lasso", "grouplasso", "sparsegrouplasso",
                                        "grpkmax", "grpkmax-prior"};
    LambdaGridFlags lambda;
    std::vector<double> mu;
    int folds = 10;
    SolverFlags solver;
    std::string out = "out";
};

void to_json(json& j, const SynthConfig& c) {
    j = json{{"m", c.m_list},     {"n", c.n},
             {"d", c.d},          {"s", c.s},
             {"noise_var", c.noise_var}, {"repeats", c.repeats},
             {"seed", c.seed},    {"methods", c.methods},
             {"lambda", c.lambda}, {"mu", c.mu},
             {"folds", c.folds},  {"solver", c.solver},
             {"out", c.out}};
}
void from_json(const json& j, SynthConfig& c) {
    j.at("m").get_to(c.m_list);
    j.at("n").get_to(c.n);
    j.at("d").get_to(c.d);
    j.at("s").get_to(c.s);
    j.at("noise_var").get_to(c.noise_var);
    j.at("repeats").get_to(c.repeats);
    j.at("seed").get_to(c.seed);
    j.at("methods").get_to(c.methods);
    j.at("lambda").get_to(c.lambda);
    j.at("mu").get_to(c.mu);
    j.at("folds").get_to(c.folds);
    j.at("solver").get_to(c.solver);
    j.at("out").get_to(c.out);
}

/// Default per-group support sizes: the base pattern for ten groups,
/// resampled across m groups and clamped to the group dimension.
std::vector<Index> default_support(Index m, Index d) {
    static const Index base[] = {10, 8, 6, 4, 2, 1, 0, 0, 0, 0};
    std::vector<Index> s;
    s.reserve(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
        s.push_back(std::min(base[(i * 10) / m], d));
    }
    return s;
}

int run_synth(const SynthConfig& cfg) {
    fs::create_directories(cfg.out);
    for (const auto& method : cfg.methods) check_method_name(method);
    const SolveOptions opts = cfg.solver.options();

    cli::CsvWriter metrics(fs::path(cfg.out) / "metrics.csv");
    metrics.row({"m", "n", "d", "method", "rep", "instance_seed", "lambda", "mu",
                 "k", "cpr_pct", "rmse_pct", "nnz_overall", "nnz_groups"});

    struct Agg {
        double cpr = 0, rmse = 0, nnz = 0, groups = 0, seconds = 0;
        int count = 0;
    };
    std::map<std::pair<Index, std::string>, Agg> agg;

    for (Index m : cfg.m_list) {
        std::vector<Index> s = cfg.s.empty() ? default_support(m, cfg.d) : cfg.s;
        if (static_cast<Index>(s.size()) != m) {
            throw std::invalid_argument("synth: s list length does not match m");
        }
        if (std::accumulate(s.begin(), s.end(), Index{0}) == 0) {
            throw std::invalid_argument(
                "synth: ground truth needs at least one nonzero entry");
        }
        for (int rep = 0; rep < cfg.repeats; ++rep) {
            SyntheticConfig inst_cfg;
            inst_cfg.n = cfg.n;
            inst_cfg.m = m;
            inst_cfg.d_per_group = cfg.d;
            inst_cfg.s = s;
            inst_cfg.noise_variance = cfg.noise_var;
            inst_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(m),
                                     static_cast<std::uint64_t>(rep));
            const auto inst = gen_synthetic(inst_cfg);
            const auto grid = cfg.lambda.resolve(inst.design);

            for (const auto& method : cfg.methods) {
                const auto t0 = std::chrono::steady_clock::now();
                const std::vector<Index> k_prior =
                    method == "grpkmax-prior" ? s : std::vector<Index>{};
                // a full-group prior (k = d) means the group is active:
                // nothing in it should be penalized
                const FitOutcome outcome = fit_method(
                    inst.design, method, grid, cfg.mu, k_prior,
                    FullKMode::unpenalized, cfg.folds,
                    mix_seed(inst_cfg.seed, 0xCFULL, 0), opts);
                const double seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                  t0)
                        .count();

                const double cpr = cpr_pct(outcome.result.x, inst.truth);
                const double rmse = rmse_pct(outcome.result.x, inst.truth);
                const auto stats = sparsity_stats(outcome.result.x, 1e-6);
                metrics.row({fmt(m), fmt(cfg.n), fmt(cfg.d), method,
                             std::to_string(rep), std::to_string(inst_cfg.seed),
                             fmt(outcome.spec.lambda), fmt(outcome.spec.mu),
                             cli::join(outcome.spec.k), fmt(cpr), fmt(rmse),
                             fmt(stats.nnz_overall), fmt(stats.nnz_groups)});

                Agg& a = agg[{m, method}];
                a.cpr += cpr;
                a.rmse += rmse;
                a.nnz += static_cast<double>(stats.nnz_overall);
                a.groups += static_cast<double>(stats.nnz_groups);
                a.seconds += seconds;
                ++a.count;
            }
        }
    }

    cli::CsvWriter aggregate(fs::path(cfg.out) / "aggregate.csv");
    aggregate.row({"m", "method", "repeats", "mean_cpr_pct", "mean_rmse_pct",
                   "mean_nnz_overall", "mean_nnz_groups"});
    cli::CsvWriter timings(fs::path(cfg.out) / "timings.csv");
    timings.row({"m", "method", "total_seconds"});
    for (Index m : cfg.m_list) {
        for (const auto& method : cfg.methods) {
            const Agg& a = agg[{m, method}];
            const double c = static_cast<double>(a.count);
            aggregate.row({fmt(m), method, std::to_string(a.count), fmt(a.cpr / c),
                           fmt(a.rmse / c), fmt(a.nnz / c), fmt(a.groups / c)});
            timings.row({fmt(m), method, fmt(a.seconds)});
        }
    }
    cli::write_manifest(cfg.out, "synth", json(cfg), {});
    return 0;
}

// ---------------------------------------------------------------------------
// shared dataset/method plumbing for fit, path, check

struct DataFlags {
    std::string data;
    std::string groups;
    bool no_standardize = false;
    bool no_center = false;

    Dataset load() const {
        StandardizeOptions opts;
        opts.standardize_features = !no_standardize;
        opts.center_response = !no_center;
        return load_dataset(data, groups, opts);
    }
};

void to_json(json& j, const DataFlags& f) {
    j = json{{"data", f.data},
             {"groups", f.groups},
             {"no_standardize", f.no_standardize},
             {"no_center", f.no_center}};
}
void from_json(const json& j, DataFlags& f) {
    j.at("data").get_to(f.data);
    j.at("groups").get_to(f.groups);
    j.at("no_standardize").get_to(f.no_standardize);
    j.at("no_center").get_to(f.no_center);
}

/// k for the group-kmax methods: the --k flag wins, then per-group values
/// from the group config; otherwise empty (auto-initialized from lasso).
std::vector<Index> resolve_k(const std::vector<Index>& k_flag,
                             const Dataset& dataset, const std::string& method) {
    if (!k_flag.empty()) {
        if (static_cast<Index>(k_flag.size()) !=
            dataset.design.num_groups()) {
            throw DimensionError("--k list length does not match group count");
        }
        return k_flag;
    }
    std::vector<Index> from_config;
    bool all = true;
    for (const auto& g : dataset.config.groups) {
        if (g.k) {
            from_config.push_back(*g.k);
        } else {
            all = false;
        }
    }
    if (all && !from_config.empty()) return from_config;
    if (method == "grpkmax-prior") {
        throw std::invalid_argument(
            "grpkmax-prior needs k for every group: pass --k or set \"k\" in the "
            "group config (--groups file)");
    }
    return {};
}

// ---------------------------------------------------------------------------
// fit

struct FitConfig {
    DataFlags data;
    std::string method = "grpkmax";
    LambdaGridFlags lambda;
    std::vector<double> mu;
    std::vector<Index> k;
    std::string full_k = "literal";
    int folds = 10;
    std::uint64_t seed = 0;
    double holdout = 0.0;
    SolverFlags solver;
    std::string out = "out";
};

void to_json(json& j, const FitConfig& c) {
    j = json{{"data", c.data},     {"method", c.method}, {"lambda", c.lambda},
             {"mu", c.mu},         {"k", c.k},           {"full_k", c.full_k},
             {"folds", c.folds},   {"seed", c.seed},     {"holdout", c.holdout},
             {"solver", c.solver}, {"out", c.out}};
}
void from_json(const json& j, FitConfig& c) {
    j.at("data").get_to(c.data);
    j.at("method").get_to(c.method);
    j.at("lambda").get_to(c.lambda);
    j.at("mu").get_to(c.mu);
    j.at("k").get_to(c.k);
    j.at("full_k").get_to(c.full_k);
    j.at("folds").get_to(c.folds);
    j.at("seed").get_to(c.seed);
    j.at("holdout").get_to(c.holdout);
    j.at("solver").get_to(c.solver);
    j.at("out").get_to(c.out);
}

std::pair<std::vector<Index>, std::vector<Index>> holdout_split(Index n,
                                                                double frac,
                                                                std::uint64_t seed) {
    std::vector<Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
    std::mt19937_64 rng(splitmix64(seed ^ 0x5017ULL));
    std::shuffle(rows.begin(), rows.end(), rng);
    const Index n_test = std::max<Index>(1, static_cast<Index>(frac * n));
    std::vector<Index> test(rows.begin(), rows.begin() + n_test);
    std::vector<Index> train(rows.begin() + n_test, rows.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    return {train, test};
}

double prediction_rmse(const GroupedDesign& design, const Vector& coef) {
    const Vector r = design.response() - detail::design_apply(design, coef);
    return std::sqrt(r.squaredNorm() / static_cast<double>(design.rows()));
}

int run_fit(const FitConfig& cfg) {
    fs::create_directories(cfg.out);
    check_method_name(cfg.method);
    const Dataset dataset = cfg.data.load();
    const SolveOptions opts = cfg.solver.options();
    const std::vector<Index> k = resolve_k(cfg.k, dataset, cfg.method);

    const GroupedDesign* fit_design = &dataset.design;
    std::optional<GroupedDesign> train;
    std::optional<GroupedDesign> test;
    if (cfg.holdout > 0.0) {
        if (cfg.holdout >= 1.0) {
            throw std::invalid_argument("--holdout must lie in [0, 1)");
        }
        const auto [train_rows, test_rows] =
            holdout_split(dataset.design.rows(), cfg.holdout, cfg.seed);
        train.emplace(detail::subset_rows(dataset.design, train_rows));
        test.emplace(detail::subset_rows(dataset.design, test_rows));
        fit_design = &*train;
    }

    const auto grid = cfg.lambda.resolve(*fit_design);
    const FitOutcome outcome =
        fit_method(*fit_design, cfg.method, grid, cfg.mu, k,
                   parse_full_k(cfg.full_k), cfg.folds, cfg.seed, opts);

    // solution on the standardized scale plus the back-transformed one
    cli::CsvWriter solution(fs::path(cfg.out) / "solution.csv");
    solution.row({"group", "column", "value", "value_original"});
    Index flat = 0;
    double intercept = dataset.response_mean;
    for (const auto& group : dataset.config.groups) {
        for (const auto& column : group.columns) {
            const double v = outcome.result.x.flat()[flat];
            const double scale = dataset.feature_scales[static_cast<std::size_t>(flat)];
            const double mean = dataset.feature_means[static_cast<std::size_t>(flat)];
            const double orig = v / scale;
            intercept -= orig * mean;
            solution.row({group.name, column, fmt(v), fmt(orig)});
            ++flat;
        }
    }

    json report;
    report["method"] = cfg.method;
    report["lambda"] = outcome.spec.lambda;
    report["mu"] = outcome.spec.mu;
    report["k"] = outcome.spec.k;
    report["iterations"] = outcome.result.iterations;
    report["terminated_by"] = to_string(outcome.result.terminated_by);
    report["gamma"] = outcome.result.gamma;
    report["intercept"] = intercept;
    const auto stats = sparsity_stats(outcome.result.x, 1e-6);
    report["nnz_overall"] = stats.nnz_overall;
    report["nnz_groups"] = stats.nnz_groups;
    report["train_rmse"] = prediction_rmse(*fit_design, outcome.result.x.flat());
    if (test) {
        report["heldout_rmse"] = prediction_rmse(*test, outcome.result.x.flat());
        report["heldout_rows"] = test->rows();
    }
    if (!outcome.cv_cells.empty()) {
        json cells = json::array();
        for (const auto& cell : outcome.cv_cells) {
            cells.push_back({{"lambda", cell.lambda},
                             {"mu", cell.mu},
                             {"mean_error", cell.mean_error}});
        }
        report["cv_cells"] = cells;
    }
    std::ofstream(fs::path(cfg.out) / "fit_metrics.json") << report.dump(2) << '\n';
    cli::write_manifest(cfg.out, "fit", json(cfg), {cfg.data.data, cfg.data.groups});
    return 0;
}

// ---------------------------------------------------------------------------
// path

struct PathConfig {
    DataFlags data;
    std::vector<std::string> methods = {"lasso", "grouplasso", "sparsegrouplasso",
                                        "grpkmax"};
    LambdaGridFlags lambda;
    std::vector<double> mu;
    std::vector<Index> k;
    std::string full_k = "literal";
    int folds = 0;  // 0: in-sample error column; >=2: CV error column
    std::uint64_t seed = 0;
    SolverFlags solver;
    std::string out = "out";
};

void to_json(json& j, const PathConfig& c) {
    j = json{{"data", c.data},     {"methods", c.methods}, {"lambda", c.lambda},
             {"mu", c.mu},         {"k", c.k},             {"full_k", c.full_k},
             {"folds", c.folds},   {"seed", c.seed},       {"solver", c.solver},
             {"out", c.out}};
}
void from_json(const json& j, PathConfig& c) {
    j.at("data").get_to(c.data);
    j.at("methods").get_to(c.methods);
    j.at("lambda").get_to(c.lambda);
    j.at("mu").get_to(c.mu);
    j.at("k").get_to(c.k);
    j.at("full_k").get_to(c.full_k);
    j.at("folds").get_to(c.folds);
    j.at("seed").get_to(c.seed);
    j.at("solver").get_to(c.solver);
    j.at("out").get_to(c.out);
}

int run_path(const PathConfig& cfg) {
    fs::create_directories(cfg.out);
    const Dataset dataset = cfg.data.load();
    const SolveOptions opts = cfg.solver.options();
    const auto grid = cfg.lambda.resolve(dataset.design);
    const double mu = cfg.mu.empty() ? default_mu_grid().front() : cfg.mu.front();

    cli::CsvWriter table(fs::path(cfg.out) / "path.csv");
    std::vector<std::string> header = {"method", "lambda", "rmse", "nnz_overall",
                                       "nnz_groups"};
    for (const auto& name : dataset.feature_names) header.push_back("coef_" + name);
    table.row(header);

    for (const auto& method : cfg.methods) {
        check_method_name(method);
        PenaltySpec tmpl;
        if (method == "lasso") {
            tmpl = PenaltySpec::lasso(0.0);
        } else if (method == "grouplasso") {
            tmpl = PenaltySpec::group_lasso(0.0);
        } else if (method == "sparsegrouplasso") {
            tmpl = PenaltySpec::sparse_group_lasso(0.0, mu);
        } else {
            std::vector<Index> k = resolve_k(cfg.k, dataset, method);
            if (k.empty()) {
                k = init_k_from_lasso(dataset.design, init_lambda_grid(dataset.design),
                                      std::max(cfg.folds, 5),
                                      splitmix64(cfg.seed ^ 0x6bULL), opts);
            }
            tmpl = PenaltySpec::group_kmax(0.0, std::move(k),
                                           parse_full_k(cfg.full_k));
        }

        const auto path = solve_path(dataset.design, tmpl, grid, opts, true);
        std::vector<double> cv_errors;
        if (cfg.folds >= 2) {
            const CvResult cv = cross_validate(dataset.design, tmpl, grid, {},
                                               cfg.folds, cfg.seed, opts);
            cv_errors.resize(grid.size());
            for (const auto& cell : cv.cells) {
                for (std::size_t li = 0; li < grid.size(); ++li) {
                    if (cell.lambda == grid[li]) cv_errors[li] = cell.mean_error;
                }
            }
        }

        for (std::size_t li = 0; li < grid.size(); ++li) {
            const auto stats = sparsity_stats(path[li].x, 1e-6);
            const double err =
                cfg.folds >= 2
                    ? std::sqrt(cv_errors[li])
                    : prediction_rmse(dataset.design, path[li].x.flat());
            std::vector<std::string> row = {method, fmt(grid[li]), fmt(err),
                                            fmt(stats.nnz_overall),
                                            fmt(stats.nnz_groups)};
            for (Index j = 0; j < path[li].x.flat().size(); ++j) {
                row.push_back(fmt(path[li].x.flat()[j]));
            }
            table.row(row);
        }
    }
    cli::write_manifest(cfg.out, "path", json(cfg), {cfg.data.data, cfg.data.groups});
    return 0;
}

// ---------------------------------------------------------------------------
// check

struct CheckConfig {
    DataFlags data;
    std::string solution;
    double lambda = 0.0;
    std::vector<Index> k;
    std::string full_k = "literal";
    SolverFlags solver;
    double margin = 1e-10;
    double fp_tol = 1e-6;
    int perturb = 0;
    double radius = 1e-4;
    std::uint64_t perturb_seed = 0;
    std::string out = "out";
};

void to_json(json& j, const CheckConfig& c) {
    j = json{{"data", c.data},       {"solution", c.solution},
             {"lambda", c.lambda},   {"k", c.k},
             {"full_k", c.full_k},   {"solver", c.solver},
             {"margin", c.margin},   {"fp_tol", c.fp_tol},
             {"perturb", c.perturb}, {"radius", c.radius},
             {"perturb_seed", c.perturb_seed}, {"out", c.out}};
}
void from_json(const json& j, CheckConfig& c) {
    j.at("data").get_to(c.data);
    j.at("solution").get_to(c.solution);
    j.at("lambda").get_to(c.lambda);
    j.at("k").get_to(c.k);
    j.at("full_k").get_to(c.full_k);
    j.at("solver").get_to(c.solver);
    j.at("margin").get_to(c.margin);
    j.at("fp_tol").get_to(c.fp_tol);
    j.at("perturb").get_to(c.perturb);
    j.at("radius").get_to(c.radius);
    j.at("perturb_seed").get_to(c.perturb_seed);
    j.at("out").get_to(c.out);
}

GroupedVector read_solution(const std::string& path, const Dataset& dataset) {
    const CsvTable table = read_csv_table(path);
    Index gcol = -1, ccol = -1, vcol = -1;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        if (table.columns[j] == "group") gcol = static_cast<Index>(j);
        if (table.columns[j] == "column") ccol = static_cast<Index>(j);
        if (table.columns[j] == "value") vcol = static_cast<Index>(j);
    }
    if (gcol < 0 || ccol < 0 || vcol < 0) {
        throw ParseError(path + ": solution file needs group, column, value columns");
    }
    std::map<std::pair<std::string, std::string>, double> cells;
    for (const auto& row : table.rows) {
        const std::string& cell = row[static_cast<std::size_t>(vcol)];
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (cell.empty() || end != cell.c_str() + cell.size()) {
            throw ParseError(path + ": non-numeric value '" + cell + "'");
        }
        cells[{row[static_cast<std::size_t>(gcol)],
               row[static_cast<std::size_t>(ccol)]}] = v;
    }
    Vector flat(dataset.design.total_dim());
    Index idx = 0;
    for (const auto& group : dataset.config.groups) {
        for (const auto& column : group.columns) {
            const auto it = cells.find({group.name, column});
            if (it == cells.end()) {
                throw DimensionError("solution file is missing coefficient '" +
                                     column + "' of group '" + group.name + "'");
            }
            flat[idx++] = it->second;
            cells.erase(it);
        }
    }
    if (!cells.empty()) {
        throw DimensionError("solution file has coefficients outside the group "
                             "config (first: group '" +
                             cells.begin()->first.first + "', column '" +
                             cells.begin()->first.second + "')");
    }
    return GroupedVector(dataset.design.structure(), std::move(flat));
}

int run_check(const CheckConfig& cfg) {
    fs::create_directories(cfg.out);
    const Dataset dataset = cfg.data.load();
    const GroupedVector x = read_solution(cfg.solution, dataset);
    std::vector<Index> k = resolve_k(cfg.k, dataset, "grpkmax-prior");
    const auto spec =
        PenaltySpec::group_kmax(cfg.lambda, std::move(k), parse_full_k(cfg.full_k));
    const SolveOptions opts = cfg.solver.options();
    const double gamma = opts.step_mode == StepMode::unit
                             ? 1.0
                             : [&] {
                                   const auto est = lipschitz_estimate(dataset.design);
                                   return est.value > 0.0
                                              ? 1.0 / (est.value *
                                                       detail::kStepSafety)
                                              : 1.0;
                               }();

    const OptimalityReport report =
        check_local_optimality(dataset.design, x, spec, gamma, cfg.margin, cfg.fp_tol);

    json out;
    out["stationary_gap"] = report.stationary_gap;
    out["fixed_point_ok"] = report.fixed_point_ok;
    out["strict_gap_ok"] = report.strict_gap_ok;
    out["gamma"] = gamma;
    out["lambda"] = cfg.lambda;
    out["k"] = spec.k;
    out["margin"] = cfg.margin;
    out["fp_tol"] = cfg.fp_tol;
    json groups = json::array();
    for (std::size_t i = 0; i < report.strict_gap.size(); ++i) {
        json g;
        g["name"] = dataset.config.groups[i].name;
        if (std::isfinite(report.strict_gap[i])) {
            g["strict_gap"] = report.strict_gap[i];
        } else {
            g["strict_gap"] = nullptr;  // vacuous: no boundary to separate
        }
        g["vacuous"] = static_cast<bool>(report.gap_vacuous[i]);
        g["ties_at_threshold"] = static_cast<bool>(report.ties_at_threshold[i]);
        groups.push_back(g);
    }
    out["groups"] = groups;
    if (cfg.perturb > 0) {
        out["perturbation_ok"] = perturbation_oracle(
            dataset.design, x, spec, cfg.radius, cfg.perturb, cfg.perturb_seed);
        out["perturb_samples"] = cfg.perturb;
        out["perturb_radius"] = cfg.radius;
    }
    std::ofstream(fs::path(cfg.out) / "report.json") << out.dump(2) << '\n';
    cli::write_manifest(cfg.out, "check", json(cfg),
                        {cfg.data.data, cfg.data.groups, cfg.solution});
    return 0;
}

// ---------------------------------------------------------------------------

int replay_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open manifest '" + path + "'");
    }
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
    const std::string sub = manifest.at("subcommand").get<std::string>();
    const json& config = manifest.at("config");
    if (sub == "synth") return run_synth(config.get<SynthConfig>());
    if (sub == "fit") return run_fit(config.get<FitConfig>());
    if (sub == "path") return run_path(config.get<PathConfig>());
    if (sub == "check") return run_check(config.get<CheckConfig>());
    throw ParseError(path + ": unknown subcommand '" + sub + "'");
}

void add_solver_flags(CLI::App* app, SolverFlags& flags) {
    app->add_option("--max-iters", flags.max_iters, "Iteration cap")
        ->capture_default_str();
    app->add_option("--tol", flags.tol, "Iterate-gap termination precision")
        ->capture_default_str();
    app->add_option("--step", flags.step, "Step mode: unit or lipschitz")
        ->check(CLI::IsMember({"unit", "lipschitz"}))
        ->capture_default_str();
}

void add_lambda_flags(CLI::App* app, LambdaGridFlags& flags) {
    app->add_option("--lambda", flags.values,
                    "Regularization level(s); more than one value selects by CV")
        ->delimiter(',');
    app->add_option("--lambda-ratios", flags.ratios,
                    "Grid as ratios of max|X^T y| (used when --lambda is absent)")
        ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grouped sparse regression via iterative soft thresholding"};
    app.require_subcommand(0, 1);
    std::string manifest_path;
    app.add_option("--from-manifest", manifest_path,
                   "Re-run a previous invocation from its manifest.json");

    SynthConfig synth;
    auto* synth_cmd =
        app.add_subcommand("synth", "Synthetic recovery benchmark with repeats");
    synth_cmd->add_option("--m", synth.m_list, "Group count(s)")->delimiter(',');
    synth_cmd->add_option("--n", synth.n, "Rows")->capture_default_str();
    synth_cmd->add_option("--d", synth.d, "Columns per group")->capture_default_str();
    synth_cmd->add_option("--s", synth.s, "Per-group true support sizes")
        ->delimiter(',');
    synth_cmd->add_option("--noise-var", synth.noise_var, "Noise variance")
        ->capture_default_str();
    synth_cmd->add_option("--repeats", synth.repeats, "Instances per m")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "Base seed")->capture_default_str();
    synth_cmd->add_option("--methods", synth.methods, "Methods to run")
        ->delimiter(',');
    add_lambda_flags(synth_cmd, synth.lambda);
    synth_cmd->add_option("--mu", synth.mu, "Sparse-group-lasso mu grid")
        ->delimiter(',');
    synth_cmd->add_option("--folds", synth.folds, "CV folds")->capture_default_str();
    add_solver_flags(synth_cmd, synth.solver);
    synth_cmd->add_option("--out", synth.out, "Output directory")
        ->capture_default_str();

    FitConfig fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit one method to a CSV dataset");
    fit_cmd->add_option("--data", fit.data.data, "Dataset CSV")->required();
    fit_cmd->add_option("--groups", fit.data.groups, "Group config JSON")
        ->required();
    fit_cmd->add_flag("--no-standardize", fit.data.no_standardize,
                      "Skip feature standardization");
    fit_cmd->add_flag("--no-center", fit.data.no_center,
                      "Skip response centering");
    fit_cmd->add_option("--method", fit.method, "Method")->capture_default_str();
    add_lambda_flags(fit_cmd, fit.lambda);
    fit_cmd->add_option("--mu", fit.mu, "Sparse-group-lasso mu grid")
        ->delimiter(',');
    fit_cmd->add_option("--k", fit.k, "Per-group k (group-kmax)")->delimiter(',');
    fit_cmd->add_option("--full-k", fit.full_k, "k = d handling")
        ->check(CLI::IsMember({"literal", "unpenalized"}))
        ->capture_default_str();
    fit_cmd->add_option("--folds", fit.folds, "CV folds")->capture_default_str();
    fit_cmd->add_option("--seed", fit.seed, "Seed")->capture_default_str();
    fit_cmd->add_option("--holdout", fit.holdout,
                        "Held-out row fraction for prediction metrics")
        ->capture_default_str();
    add_solver_flags(fit_cmd, fit.solver);
    fit_cmd->add_option("--out", fit.out, "Output directory")->capture_default_str();

    PathConfig path;
    auto* path_cmd =
        app.add_subcommand("path", "Regularization path table for plotting");
    path_cmd->add_option("--data", path.data.data, "Dataset CSV")->required();
    path_cmd->add_option("--groups", path.data.groups, "Group config JSON")
        ->required();
    path_cmd->add_flag("--no-standardize", path.data.no_standardize,
                       "Skip feature standardization");
    path_cmd->add_flag("--no-center", path.data.no_center,
                       "Skip response centering");
    path_cmd->add_option("--methods", path.methods, "Methods to sweep")
        ->delimiter(',');
    add_lambda_flags(path_cmd, path.lambda);
    path_cmd->add_option("--mu", path.mu, "Sparse-group-lasso mu (first value)")
        ->delimiter(',');
    path_cmd->add_option("--k", path.k, "Per-group k (group-kmax)")->delimiter(',');
    path_cmd->add_option("--full-k", path.full_k, "k = d handling")
        ->check(CLI::IsMember({"literal", "unpenalized"}))
        ->capture_default_str();
    path_cmd->add_option("--folds", path.folds,
                         "CV folds for the rmse column (0 = in-sample)")
        ->capture_default_str();
    path_cmd->add_option("--seed", path.seed, "Seed")->capture_default_str();
    add_solver_flags(path_cmd, path.solver);
    path_cmd->add_option("--out", path.out, "Output directory")
        ->capture_default_str();

    CheckConfig check;
    auto* check_cmd = app.add_subcommand(
        "check", "Certify a solution file against the local-optimality conditions");
    check_cmd->add_option("--data", check.data.data, "Dataset CSV")->required();
    check_cmd->add_option("--groups", check.data.groups, "Group config JSON")
        ->required();
    check_cmd->add_flag("--no-standardize", check.data.no_standardize,
                        "Skip feature standardization");
    check_cmd->add_flag("--no-center", check.data.no_center,
                        "Skip response centering");
    check_cmd->add_option("--solution", check.solution, "solution.csv from fit")
        ->required();
    check_cmd->add_option("--lambda", check.lambda, "Regularization level")
        ->required();
    check_cmd->add_option("--k", check.k, "Per-group k")->delimiter(',');
    check_cmd->add_option("--full-k", check.full_k, "k = d handling")
        ->check(CLI::IsMember({"literal", "unpenalized"}))
        ->capture_default_str();
    add_solver_flags(check_cmd, check.solver);
    check_cmd->add_option("--margin", check.margin, "Strict-gap margin")
        ->capture_default_str();
    check_cmd->add_option("--fp-tol", check.fp_tol, "Fixed-point tolerance")
        ->capture_default_str();
    check_cmd->add_option("--perturb", check.perturb,
                          "Random perturbation samples (0 = skip)")
        ->capture_default_str();
    check_cmd->add_option("--radius", check.radius, "Perturbation radius")
        ->capture_default_str();
    check_cmd->add_option("--perturb-seed", check.perturb_seed, "Perturbation seed")
        ->capture_default_str();
    check_cmd->add_option("--out", check.out, "Output directory")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!manifest_path.empty()) {
            if (app.get_subcommands().size() > 0) {
                std::cerr << "error: use either a subcommand or --from-manifest, "
                             "not both"
                          << std::endl;
                return 1;
            }
            return replay_manifest(manifest_path);
        }
        if (synth_cmd->parsed()) return run_synth(synth);
        if (fit_cmd->parsed()) return run_fit(fit);
        if (path_cmd->parsed()) return run_path(path);
        if (check_cmd->parsed()) return run_check(check);
        std::cerr << app.help() << std::endl;
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 3;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
