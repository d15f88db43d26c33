#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "grpkmax/prox.hpp"
#include "grpkmax/types.hpp"

namespace grpkmax {

/// Sizes and flat offsets of an ordered group partition.
class GroupStructure {
  public:
    GroupStructure() = default;

    explicit GroupStructure(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
        if (sizes_.empty()) {
            throw DimensionError("GroupStructure: need at least one group");
        }
        offsets_.reserve(sizes_.size());
        for (Index s : sizes_) {
            if (s < 1) {
                throw DimensionError("GroupStructure: group sizes must be >= 1");
            }
            offsets_.push_back(total_);
            total_ += s;
        }
    }

    static GroupStructure uniform(Index m, Index d_each) {
        return GroupStructure(std::vector<Index>(static_cast<std::size_t>(m), d_each));
    }

    Index num_groups() const { return static_cast<Index>(sizes_.size()); }
    Index total_dim() const { return total_; }
    Index size(Index i) const { return sizes_[static_cast<std::size_t>(i)]; }
    Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
    const std::vector<Index>& sizes() const { return sizes_; }

    friend bool operator==(const GroupStructure& a, const GroupStructure& b) {
        return a.sizes_ == b.sizes_;
    }

  private:
    std::vector<Index> sizes_;
    std::vector<Index> offsets_;
    Index total_ = 0;
};

/// Coefficient vector partitioned into groups. Stores the flat vector;
/// group blocks are contiguous segments, so the flat/block views are
/// bijective by construction.
class GroupedVector {
  public:
    /// Empty placeholder; any real instance comes from the validating
    /// constructors below.
    GroupedVector() = default;

    GroupedVector(GroupStructure structure, Vector flat)
        : structure_(std::move(structure)), flat_(std::move(flat)) {
        if (flat_.size() != structure_.total_dim()) {
            throw DimensionError(
                "GroupedVector: flat size " + std::to_string(flat_.size()) +
                " does not match structure total " +
                std::to_string(structure_.total_dim()));
        }
    }

    static GroupedVector zeros(const GroupStructure& structure) {
        return GroupedVector(structure, Vector::Zero(structure.total_dim()));
    }

    static GroupedVector from_blocks(const std::vector<Vector>& blocks) {
        std::vector<Index> sizes;
        sizes.reserve(blocks.size());
        Index total = 0;
        for (const Vector& b : blocks) {
            sizes.push_back(b.size());
            total += b.size();
        }
        GroupStructure structure(std::move(sizes));
        Vector flat(total);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            flat.segment(structure.offset(static_cast<Index>(i)),
                         structure.size(static_cast<Index>(i))) = blocks[i];
        }
        return GroupedVector(std::move(structure), std::move(flat));
    }

    const GroupStructure& structure() const { return structure_; }
    const Vector& flat() const { return flat_; }
    Vector& flat() { return flat_; }

    auto block(Index i) const {
        return flat_.segment(structure_.offset(i), structure_.size(i));
    }
    auto block(Index i) {
        return flat_.segment(structure_.offset(i), structure_.size(i));
    }

    std::vector<Vector> blocks() const {
        std::vector<Vector> out;
        out.reserve(static_cast<std::size_t>(structure_.num_groups()));
        for (Index i = 0; i < structure_.num_groups(); ++i) {
            out.emplace_back(block(i));
        }
        return out;
    }

  private:
    GroupStructure structure_;
    Vector flat_;
};

/// Per-group observation matrices and the shared response vector.
class GroupedDesign {
  public:
    GroupedDesign(std::vector<Matrix> groups, Vector response)
        : groups_(std::move(groups)), response_(std::move(response)) {
        if (groups_.empty()) {
            throw DimensionError("GroupedDesign: need at least one group");
        }
        const Index n = groups_.front().rows();
        if (n < 1) {
            throw DimensionError("GroupedDesign: need at least one row");
        }
        std::vector<Index> sizes;
        sizes.reserve(groups_.size());
        for (const Matrix& g : groups_) {
            if (g.rows() != n) {
                throw DimensionError("GroupedDesign: group row counts differ");
            }
            if (g.cols() < 1) {
                throw DimensionError("GroupedDesign: empty group");
            }
            sizes.push_back(g.cols());
        }
        if (response_.size() != n) {
            throw DimensionError(
                "GroupedDesign: response length " + std::to_string(response_.size()) +
                " does not match row count " + std::to_string(n));
        }
        structure_ = GroupStructure(std::move(sizes));
    }

    Index rows() const { return response_.size(); }
    Index num_groups() const { return structure_.num_groups(); }
    Index total_dim() const { return structure_.total_dim(); }
    const Matrix& group(Index i) const { return groups_[static_cast<std::size_t>(i)]; }
    const Vector& response() const { return response_; }
    const GroupStructure& structure() const { return structure_; }

  private:
    std::vector<Matrix> groups_;
    Vector response_;
    GroupStructure structure_;
};

enum class PenaltyKind { lasso, group_lasso, sparse_group_lasso, group_kmax };

/// Scale of the least-squares term: (1/2)||r||^2 or (1/2n)||r||^2.
enum class LossScale { half, half_over_n };

inline std::string to_string(PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::lasso: return "lasso";
        case PenaltyKind::group_lasso: return "group-lasso";
        case PenaltyKind::sparse_group_lasso: return "sparse-group-lasso";
        case PenaltyKind::group_kmax: return "group-kmax";
    }
    return "unknown";
}

/// Regularizer choice plus its hyperparameters. `k` applies to the
/// group-kmax kind only; `mu` to sparse group lasso only; `group_weights`
/// to the group-lasso family (empty means the sqrt(group size) default).
struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::lasso;
    double lambda = 0.0;
    double mu = 0.0;
    std::vector<Index> k;
    std::vector<double> group_weights;
    FullKMode full_k_mode = FullKMode::literal;

    static PenaltySpec lasso(double lambda) {
        PenaltySpec p;
        p.kind = PenaltyKind::lasso;
        p.lambda = lambda;
        return p;
    }

    static PenaltySpec group_lasso(double lambda, std::vector<double> weights = {}) {
        PenaltySpec p;
        p.kind = PenaltyKind::group_lasso;
        p.lambda = lambda;
        p.group_weights = std::move(weights);
        return p;
    }

    static PenaltySpec sparse_group_lasso(double lambda, double mu,
                                          std::vector<double> weights = {}) {
        PenaltySpec p;
        p.kind = PenaltyKind::sparse_group_lasso;
        p.lambda = lambda;
        p.mu = mu;
        p.group_weights = std::move(weights);
        return p;
    }

    static PenaltySpec group_kmax(double lambda, std::vector<Index> k,
                                  FullKMode mode = FullKMode::literal) {
        PenaltySpec p;
        p.kind = PenaltyKind::group_kmax;
        p.lambda = lambda;
        p.k = std::move(k);
        p.full_k_mode = mode;
        return p;
    }

    void validate(const GroupStructure& structure) const {
        if (!(lambda >= 0.0)) {
            throw std::invalid_argument("PenaltySpec: lambda must be >= 0");
        }
        if (!(mu >= 0.0)) {
            throw std::invalid_argument("PenaltySpec: mu must be >= 0");
        }
        if (mu != 0.0 && kind != PenaltyKind::sparse_group_lasso) {
            throw std::invalid_argument(
                "PenaltySpec: mu applies to sparse-group-lasso only");
        }
        if (kind == PenaltyKind::group_kmax) {
            if (static_cast<Index>(k.size()) != structure.num_groups()) {
                throw DimensionError(
                    "PenaltySpec: k list length " + std::to_string(k.size()) +
                    " does not match group count " +
                    std::to_string(structure.num_groups()));
            }
            for (Index i = 0; i < structure.num_groups(); ++i) {
                const Index ki = k[static_cast<std::size_t>(i)];
                if (ki < 0 || ki > structure.size(i)) {
                    throw std::invalid_argument(
                        "PenaltySpec: k[" + std::to_string(i) + "] = " +
                        std::to_string(ki) + " out of range [0, " +
                        std::to_string(structure.size(i)) + "]");
                }
            }
        } else if (!k.empty()) {
            throw std::invalid_argument("PenaltySpec: k applies to group-kmax only");
        }
        const bool group_family = kind == PenaltyKind::group_lasso ||
                                  kind == PenaltyKind::sparse_group_lasso;
        if (!group_weights.empty()) {
            if (!group_family) {
                throw std::invalid_argument(
                    "PenaltySpec: group_weights apply to the group-lasso family only");
            }
            if (static_cast<Index>(group_weights.size()) != structure.num_groups()) {
                throw DimensionError("PenaltySpec: group_weights length mismatch");
            }
            for (double w : group_weights) {
                if (!(w > 0.0)) {
                    throw std::invalid_argument(
                        "PenaltySpec: group weights must be positive");
                }
            }
        }
    }

    /// Supplied weights, or the sqrt(group size) default.
    std::vector<double> effective_weights(const GroupStructure& structure) const {
        if (!group_weights.empty()) return group_weights;
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(structure.num_groups()));
        for (Index i = 0; i < structure.num_groups(); ++i) {
            w.push_back(std::sqrt(static_cast<double>(structure.size(i))));
        }
        return w;
    }
};

namespace detail {

inline Vector design_apply(const GroupedDesign& design, const Vector& flat) {
    Vector out = Vector::Zero(design.rows());
    for (Index i = 0; i < design.num_groups(); ++i) {
        out.noalias() += design.group(i) *
            flat.segment(design.structure().offset(i), design.structure().size(i));
    }
    return out;
}

inline Vector design_apply_transpose(const GroupedDesign& design, const Vector& w) {
    Vector out(design.total_dim());
    for (Index i = 0; i < design.num_groups(); ++i) {
        out.segment(design.structure().offset(i), design.structure().size(i)).noalias() =
            design.group(i).transpose() * w;
    }
    return out;
}

}  // namespace detail

inline Vector predict(const GroupedDesign& design, const GroupedVector& x) {
    if (!(x.structure() == design.structure())) {
        throw DimensionError("predict: coefficient structure does not match design");
    }
    Vector yhat = Vector::Zero(design.rows());
    for (Index i = 0; i < design.num_groups(); ++i) {
        yhat.noalias() += design.group(i) * x.block(i);
    }
    return yhat;
}

inline Vector residual(const GroupedDesign& design, const GroupedVector& x) {
    return design.response() - predict(design, x);
}

/// Regularization term of the objective for the given penalty.
inline double penalty_value(const GroupedVector& x, const PenaltySpec& penalty) {
    penalty.validate(x.structure());
    const GroupStructure& gs = x.structure();
    switch (penalty.kind) {
        case PenaltyKind::lasso:
            return penalty.lambda * x.flat().lpNorm<1>();
        case PenaltyKind::group_lasso: {
            const auto w = penalty.effective_weights(gs);
            double sum = 0.0;
            for (Index i = 0; i < gs.num_groups(); ++i) {
                sum += w[static_cast<std::size_t>(i)] * x.block(i).norm();
            }
            return penalty.lambda * sum;
        }
        case PenaltyKind::sparse_group_lasso: {
            const auto w = penalty.effective_weights(gs);
            double sum = 0.0;
            for (Index i = 0; i < gs.num_groups(); ++i) {
                sum += w[static_cast<std::size_t>(i)] * x.block(i).norm();
            }
            return penalty.lambda * sum + penalty.mu * x.flat().lpNorm<1>();
        }
        case PenaltyKind::group_kmax: {
            double sum = 0.0;
            for (Index i = 0; i < gs.num_groups(); ++i) {
                sum += kmax_penalty(x.block(i), penalty.k[static_cast<std::size_t>(i)],
                                    penalty.full_k_mode);
            }
            return penalty.lambda * sum;
        }
    }
    throw std::invalid_argument("penalty_value: unknown penalty kind");
}

inline double objective(const GroupedDesign& design, const GroupedVector& x,
                        const PenaltySpec& penalty,
                        LossScale scale = LossScale::half) {
    const Vector r = residual(design, x);
    double fit = 0.5 * r.squaredNorm();
    if (scale == LossScale::half_over_n) {
        fit /= static_cast<double>(design.rows());
    }
    return fit + penalty_value(x, penalty);
}

}  // namespace grpkmax
