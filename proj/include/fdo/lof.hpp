#pragma once

// Local Outlier Factor over a Euclidean point set.
//
//   d^k(x)    distance from x to its k-th nearest other point
//   N_k(x)    the k nearest other points
//   r_k(x,o)  = max(d^k(o), d(x, o))
//   lr_k(x)   = k / sum_{o in N_k(x)} r_k(x, o)
//   LOF_k(x)  = (1/k) sum_{o in N_k(x)} lr_k(o) / lr_k(x)
//
// Distance ties are broken by ascending point index, so |N_k(x)| = k always.
// When k+1 or more points coincide the reachability sum can vanish; such a
// point gets lr = +inf and LOF = 1, and a finite-density point whose neighbour
// has lr = +inf sees that neighbour's ratio capped at 1e12.

#include "fdo/curves.hpp"
#include "fdo/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace fdo {

struct PointSet {
    Eigen::MatrixXd points;  ///< one row per object
    std::vector<std::string> ids;

    Index size() const noexcept { return static_cast<Index>(points.rows()); }
    Index dim() const noexcept { return static_cast<Index>(points.cols()); }
};

inline PointSet make_point_set(Eigen::MatrixXd points, std::vector<std::string> ids = {}) {
    if (points.cols() < 1) throw InvalidArgument("points need at least one coordinate");
    if (!points.allFinite()) throw InvalidArgument("point coordinates must be finite");
    if (ids.empty())
        for (Eigen::Index i = 0; i < points.rows(); ++i) ids.push_back(std::to_string(i));
    if (ids.size() != static_cast<std::size_t>(points.rows())) throw InvalidArgument("one id per point is required");
    return PointSet{std::move(points), std::move(ids)};
}

struct Neighborhoods {
    std::vector<double> kdist;
    std::vector<std::vector<Index>> neighbors;  ///< nearest first
};

struct LOFScores {
    std::size_t k = 0;
    std::vector<double> scores;
    std::vector<double> kdist;
    std::vector<double> lrd;  ///< +inf marks a zero reachability sum
    std::vector<std::vector<Index>> neighbors;
};

inline constexpr double kInfiniteDensityRatio = 1e12;

inline Eigen::MatrixXd pairwise_distances(const PointSet& ps) {
    const auto n = ps.points.rows();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = (ps.points.row(i) - ps.points.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

namespace detail {
inline void check_k(std::size_t k, Index n) {
    if (k < 1 || k >= n)
        throw InvalidArgument("LOF needs 1 <= k < n (k = " + std::to_string(k) + ", n = " + std::to_string(n) + ")");
}
} // namespace detail

inline Neighborhoods kdistance_and_neighbors(const Eigen::MatrixXd& dist, std::size_t k) {
    const auto n = static_cast<Index>(dist.rows());
    detail::check_k(k, n);
    Neighborhoods nb;
    nb.kdist.resize(n);
    nb.neighbors.resize(n);
    std::vector<Index> others;
    for (Index i = 0; i < n; ++i) {
        others.clear();
        for (Index j = 0; j < n; ++j)
            if (j != i) others.push_back(j);
        const auto row = static_cast<Eigen::Index>(i);
        auto closer = [&](Index a, Index b) {
            const double da = dist(row, static_cast<Eigen::Index>(a));
            const double db = dist(row, static_cast<Eigen::Index>(b));
            return da < db || (da == db && a < b);
        };
        std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k), others.end(), closer);
        nb.neighbors[i].assign(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k));
        nb.kdist[i] = dist(row, static_cast<Eigen::Index>(nb.neighbors[i].back()));
    }
    return nb;
}

inline Neighborhoods kdistance_and_neighbors(const PointSet& points, std::size_t k) {
    detail::check_k(k, points.size());
    return kdistance_and_neighbors(pairwise_distances(points), k);
}

inline LOFScores lof_scores(const Eigen::MatrixXd& dist, std::size_t k) {
    auto nb = kdistance_and_neighbors(dist, k);
    const Index n = nb.kdist.size();
    constexpr double inf = std::numeric_limits<double>::infinity();

    LOFScores out;
    out.k = k;
    out.lrd.resize(n);
    for (Index i = 0; i < n; ++i) {
        double reach = 0.0;
        for (Index o : nb.neighbors[i])
            reach += std::max(nb.kdist[o], dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o)));
        out.lrd[i] = reach > 0.0 ? static_cast<double>(k) / reach : inf;
    }
    out.scores.resize(n);
    for (Index i = 0; i < n; ++i) {
        if (std::isinf(out.lrd[i])) {
            out.scores[i] = 1.0;
            continue;
        }
        double sum = 0.0;
        for (Index o : nb.neighbors[i])
            sum += std::isinf(out.lrd[o]) ? kInfiniteDensityRatio : out.lrd[o] / out.lrd[i];
        out.scores[i] = sum / static_cast<double>(k);
    }
    out.kdist = std::move(nb.kdist);
    out.neighbors = std::move(nb.neighbors);
    return out;
}

inline LOFScores lof_scores(const PointSet& points, std::size_t k) {
    detail::check_k(k, points.size());
    return lof_scores(pairwise_distances(points), k);
}

/// Indices whose score strictly exceeds the threshold, ascending.
inline std::vector<Index> flag_above(const std::vector<double>& scores, double threshold) {
    std::vector<Index> out;
    for (Index i = 0; i < scores.size(); ++i)
        if (scores[i] > threshold) out.push_back(i);
    return out;
}

} // namespace fdo
