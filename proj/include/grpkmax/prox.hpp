#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "grpkmax/types.hpp"

namespace grpkmax {

/// Behavior of the k-max operators at k = d (every entry in the top set).
/// `literal` keeps the entries tied with the minimum magnitude penalized;
/// `unpenalized` treats the whole group as unpenalized.
enum class FullKMode { literal, unpenalized };

/// Partition of one group's indices around the penalization boundary.
/// The k largest-magnitude entries are exempt, so for 1 <= k < d the
/// threshold is the (k+1)-th largest absolute value: `plus` holds
/// |x(j)| > threshold (the protected top set), `eq` the entries tied at
/// the threshold, `minus` those strictly below, and `leq` = `eq` ∪
/// `minus` is the penalized set. Ties that would straddle rank k are all
/// penalized; no index-based tie-breaking. Conventions at the ends:
/// k = 0 penalizes everything (threshold = +inf sentinel); k = d keeps
/// the threshold at the minimum magnitude, so its ties stay penalized,
/// unless FullKMode::unpenalized is chosen (threshold = -inf sentinel,
/// nothing penalized).
struct IndexPartition {
    double threshold = 0.0;
    std::vector<Index> eq;
    std::vector<Index> plus;
    std::vector<Index> minus;
    std::vector<Index> leq;
};

inline double soft_threshold_scalar(double v, double tau) {
    const double a = std::abs(v) - tau;
    if (a <= 0.0) return 0.0;
    return v < 0.0 ? -a : a;
}

/// k-th largest absolute value, counted with multiplicity, k in [1, d].
/// Partial selection, O(d) expected.
inline double kth_max_abs(const Vector& x, Index k) {
    if (x.size() == 0) {
        throw std::invalid_argument("kth_max_abs: empty vector");
    }
    if (k < 1 || k > x.size()) {
        throw std::invalid_argument(
            "kth_max_abs: k = " + std::to_string(k) + " out of range [1, " +
            std::to_string(x.size()) + "]");
    }
    std::vector<double> mags(static_cast<std::size_t>(x.size()));
    for (Index j = 0; j < x.size(); ++j) {
        mags[static_cast<std::size_t>(j)] = std::abs(x[j]);
    }
    auto nth = mags.begin() + (k - 1);
    std::nth_element(mags.begin(), nth, mags.end(), std::greater<double>());
    return *nth;
}

inline IndexPartition partition_indices(const Vector& x, Index k,
                                        FullKMode mode = FullKMode::literal) {
    const Index d = x.size();
    if (d == 0) {
        throw std::invalid_argument("partition_indices: empty vector");
    }
    if (k < 0 || k > d) {
        throw std::invalid_argument(
            "partition_indices: k = " + std::to_string(k) +
            " out of range [0, " + std::to_string(d) + "]");
    }
    IndexPartition p;
    if (k == 0) {
        p.threshold = std::numeric_limits<double>::infinity();
        p.minus.reserve(static_cast<std::size_t>(d));
        p.leq.reserve(static_cast<std::size_t>(d));
        for (Index j = 0; j < d; ++j) {
            p.minus.push_back(j);
            p.leq.push_back(j);
        }
        return p;
    }
    if (k == d && mode == FullKMode::unpenalized) {
        p.threshold = -std::numeric_limits<double>::infinity();
        p.plus.reserve(static_cast<std::size_t>(d));
        for (Index j = 0; j < d; ++j) p.plus.push_back(j);
        return p;
    }
    p.threshold = kth_max_abs(x, k == d ? d : k + 1);
    for (Index j = 0; j < d; ++j) {
        const double a = std::abs(x[j]);
        if (a > p.threshold) {
            p.plus.push_back(j);
        } else {
            if (a < p.threshold) {
                p.minus.push_back(j);
            } else {
                p.eq.push_back(j);
            }
            p.leq.push_back(j);
        }
    }
    return p;
}

/// Sum of absolute values over the penalized index set.
inline double kmax_penalty(const Vector& x, Index k,
                           FullKMode mode = FullKMode::literal) {
    const IndexPartition p = partition_indices(x, k, mode);
    double sum = 0.0;
    for (Index j : p.leq) sum += std::abs(x[j]);
    return sum;
}

/// Group k-max soft shrinkage: soft thresholding on the penalized set,
/// identity on the top-k set. Entries with |x(j)| = tau map to 0.
inline Vector kmax_shrink(const Vector& x, Index k, double tau,
                          FullKMode mode = FullKMode::literal) {
    if (tau < 0.0) {
        throw std::invalid_argument("kmax_shrink: negative tau");
    }
    const IndexPartition p = partition_indices(x, k, mode);
    Vector out = x;
    for (Index j : p.leq) out[j] = soft_threshold_scalar(x[j], tau);
    return out;
}

/// Elementwise soft thresholding sgn(x) * max(|x| - tau, 0).
inline Vector soft_threshold(const Vector& x, double tau) {
    if (tau < 0.0) {
        throw std::invalid_argument("soft_threshold: negative tau");
    }
    Vector out(x.size());
    for (Index j = 0; j < x.size(); ++j) {
        out[j] = soft_threshold_scalar(x[j], tau);
    }
    return out;
}

/// Block (Euclidean-norm) shrinkage max(1 - tau/||x||, 0) * x.
inline Vector block_shrink(const Vector& x, double tau) {
    if (tau < 0.0) {
        throw std::invalid_argument("block_shrink: negative tau");
    }
    const double nrm = x.norm();
    if (nrm == 0.0) return Vector::Zero(x.size());
    const double factor = 1.0 - tau / nrm;
    if (factor <= 0.0) return Vector::Zero(x.size());
    return factor * x;
}

/// Composite prox for the l1 + group-norm penalty: soft threshold, then
/// block shrinkage.
inline Vector sparse_group_shrink(const Vector& x, double tau_group,
                                  double tau_l1) {
    if (tau_group < 0.0 || tau_l1 < 0.0) {
        throw std::invalid_argument("sparse_group_shrink: negative tau");
    }
    return block_shrink(soft_threshold(x, tau_l1), tau_group);
}

}  // namespace grpkmax
