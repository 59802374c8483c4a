#pragma once

// Projection of curves onto the discrete Haar basis and onto a principal
// component basis fitted on part of the nominal set.
//
// Both bases are orthonormal for <u, v>_p = (1/p) sum_j u_j v_j, so in both
// cases a coefficient is theta_{i,lambda} = <X_i, phi_lambda>_p.

#include "fdo/curves.hpp"
#include "fdo/error.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <variant>
#include <vector>

namespace fdo {

/// Either the scaling function phi_0 = 1 or the wavelet
/// phi_{l,k}(t) = 2^{l/2} psi(2^l t - k), psi = 1_[0,1/2) - 1_[1/2,1).
struct HaarIndex {
    bool scaling = true;
    int level = 0;
    int position = 0;

    static constexpr HaarIndex make_scaling() noexcept { return {}; }
    static constexpr HaarIndex wavelet(int l, int k) noexcept { return {false, l, k}; }

    /// Column of this index in a Haar FeatureMatrix: scaling first, then
    /// wavelets by (level, position), i.e. column 2^l + k.
    std::size_t column() const noexcept { return scaling ? 0 : (std::size_t{1} << level) + static_cast<std::size_t>(position); }

    friend bool operator==(const HaarIndex&, const HaarIndex&) = default;
};

/// 1-based principal component rank.
struct PcRank {
    int rank = 1;
    friend bool operator==(const PcRank&, const PcRank&) = default;
};

using LevelId = std::variant<HaarIndex, PcRank>;

inline std::string level_label(const LevelId& id) {
    if (const auto* h = std::get_if<HaarIndex>(&id)) {
        if (h->scaling) return "scaling";
        return "w" + std::to_string(h->level) + "." + std::to_string(h->position);
    }
    return "pc" + std::to_string(std::get<PcRank>(id).rank);
}

enum class BasisKind { Haar, PCA };

inline const char* to_string(BasisKind k) { return k == BasisKind::Haar ? "haar" : "pca"; }

struct FeatureMatrix {
    Eigen::MatrixXd coeffs;         ///< rows x |Lambda|
    std::vector<LevelId> level_index;
    BasisKind basis_kind = BasisKind::Haar;
    IndexList source_rows;          ///< curve index of each coefficient row

    Index rows() const noexcept { return static_cast<Index>(coeffs.rows()); }
    Index width() const noexcept { return static_cast<Index>(coeffs.cols()); }
};

struct PCABasis {
    Eigen::VectorXd mean_curve;
    Eigen::MatrixXd components;     ///< p x d, column lambda is Phi_lambda with <Phi, Phi>_p = 1
    Eigen::VectorXd eigenvalues;    ///< d values, nonincreasing
    IndexList fit_indices;

    Index p() const noexcept { return static_cast<Index>(mean_curve.size()); }
    Index size() const noexcept { return static_cast<Index>(components.cols()); }
};

// ---------------------------------------------------------------------------
// Haar

inline bool is_power_of_two(std::size_t p) noexcept { return p != 0 && (p & (p - 1)) == 0; }

inline int log2_exact(std::size_t p) noexcept {
    int j = 0;
    while ((std::size_t{1} << j) < p) ++j;
    return j;
}

inline double haar_eval(const HaarIndex& lambda, double t) {
    if (!(t >= 0.0 && t < 1.0)) throw DomainError("Haar functions are evaluated on [0, 1)");
    if (lambda.scaling) return 1.0;
    const double u = std::ldexp(t, lambda.level) - lambda.position;
    const double height = std::pow(2.0, 0.5 * lambda.level);
    if (u >= 0.0 && u < 0.5) return height;
    if (u >= 0.5 && u < 1.0) return -height;
    return 0.0;
}

/// Index set Lambda for p = 2^(J+1) samples, in column order.
inline std::vector<LevelId> haar_levels(std::size_t p) {
    if (p < 2 || !is_power_of_two(p))
        throw UnsupportedShapeError("Haar projection needs a power-of-two number of samples, got " + std::to_string(p));
    std::vector<LevelId> out;
    out.reserve(p);
    out.emplace_back(HaarIndex::make_scaling());
    for (int l = 0; (std::size_t{1} << l) < p; ++l)
        for (int k = 0; k < (1 << l); ++k) out.emplace_back(HaarIndex::wavelet(l, k));
    return out;
}

namespace detail {

/// In-place forward transform of one curve. Works on block sums: the sum of
/// block k at resolution r covers p/2^r samples; the wavelet (l, k) is the
/// difference of the two half-block sums at resolution l+1, scaled by
/// 2^{l/2}/p.
inline void haar_forward(const double* x, double* out, std::size_t p, std::vector<double>& work) {
    work.assign(x, x + p);
    std::size_t len = p;
    while (len > 1) {
        const std::size_t half = len / 2;
        const int l = log2_exact(half);
        const double scale = std::pow(2.0, 0.5 * l) / static_cast<double>(p);
        for (std::size_t k = 0; k < half; ++k) {
            const double a = work[2 * k];
            const double b = work[2 * k + 1];
            out[half + k] = scale * (a - b);
            work[k] = a + b;
        }
        len = half;
    }
    out[0] = work[0] / static_cast<double>(p);
}

/// Inverse of haar_forward: block averages refined level by level.
inline void haar_inverse(const double* theta, double* x, std::size_t p, std::vector<double>& work) {
    work.assign(p, 0.0);
    work[0] = theta[0];
    for (std::size_t half = 1; half < p; half *= 2) {
        const int l = log2_exact(half);
        const double height = std::pow(2.0, 0.5 * l);
        for (std::size_t k = half; k-- > 0;) {
            const double avg = work[k];
            const double d = height * theta[half + k];
            work[2 * k] = avg + d;
            work[2 * k + 1] = avg - d;
        }
    }
    std::copy(work.begin(), work.end(), x);
}

} // namespace detail

inline FeatureMatrix haar_project(const CurveSet& curves) {
    const std::size_t p = curves.p();
    FeatureMatrix fm;
    fm.level_index = haar_levels(p);
    fm.basis_kind = BasisKind::Haar;
    fm.coeffs.resize(static_cast<Eigen::Index>(curves.n()), static_cast<Eigen::Index>(p));
    fm.source_rows.resize(curves.n());

    std::vector<double> x(p), theta(p), work;
    for (Index i = 0; i < curves.n(); ++i) {
        for (std::size_t j = 0; j < p; ++j) x[j] = curves.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        detail::haar_forward(x.data(), theta.data(), p, work);
        for (std::size_t j = 0; j < p; ++j) fm.coeffs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = theta[j];
        fm.source_rows[i] = i;
    }
    return fm;
}

inline CurveSet haar_reconstruct(const FeatureMatrix& features) {
    if (features.basis_kind != BasisKind::Haar) throw InvalidArgument("haar_reconstruct needs Haar features");
    const std::size_t p = features.width();
    if (p < 2 || !is_power_of_two(p) || features.level_index.size() != p)
        throw IncompleteBasisError("Haar reconstruction needs the full set of " + std::to_string(p) + " coefficients");
    for (std::size_t c = 0; c < p; ++c) {
        const auto* h = std::get_if<HaarIndex>(&features.level_index[c]);
        if (!h || h->column() != c)
            throw IncompleteBasisError("Haar coefficient columns are not the complete index set in canonical order");
    }

    Eigen::MatrixXd x(features.coeffs.rows(), static_cast<Eigen::Index>(p));
    std::vector<double> theta(p), row(p), work;
    for (Eigen::Index i = 0; i < features.coeffs.rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) theta[j] = features.coeffs(i, static_cast<Eigen::Index>(j));
        detail::haar_inverse(theta.data(), row.data(), p, work);
        for (std::size_t j = 0; j < p; ++j) x(i, static_cast<Eigen::Index>(j)) = row[j];
    }
    return CurveSet(std::move(x));
}

// ---------------------------------------------------------------------------
// PCA

/// Relative eigenvalue floor below which components are dropped.
inline constexpr double kPcaDropRatio = 1e-12;

/// Fits principal components on I0 = every second nominal row (positions 1,
/// 3, 5, ...). Covariance uses the 1/|I0| normalization. Eigenvectors get a
/// deterministic sign (first non-negligible coordinate positive) and are
/// scaled by sqrt(p) so they are unit vectors for <., .>_p.
inline PCABasis pca_fit(const CurveSet& curves, const SplitLabels& split) {
    if (split.n() != curves.n()) throw InvalidArgument("split does not match the number of curves");
    PCABasis basis;
    basis.fit_indices = split.pca_fit_indices();
    const auto m = static_cast<Eigen::Index>(basis.fit_indices.size());
    if (m < 2) throw InsufficientDataError("PCA needs at least 2 fitting curves");
    const auto p = static_cast<Eigen::Index>(curves.p());

    Eigen::MatrixXd fit(m, p);
    for (Eigen::Index r = 0; r < m; ++r) fit.row(r) = curves.row(basis.fit_indices[static_cast<Index>(r)]);
    basis.mean_curve = fit.colwise().mean().transpose();
    const Eigen::MatrixXd centered = fit.rowwise() - basis.mean_curve.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(m);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("eigendecomposition did not converge");
    const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
    const Eigen::MatrixXd& evecs = solver.eigenvectors();

    const double lambda_max = std::max(0.0, evals(p - 1));
    const Eigen::Index max_keep = std::min(p, m);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = p - 1; c >= 0 && static_cast<Eigen::Index>(keep.size()) < max_keep; --c) {
        if (lambda_max <= 0.0 || evals(c) < kPcaDropRatio * lambda_max) break;
        keep.push_back(c);
    }

    const double root_p = std::sqrt(static_cast<double>(p));
    basis.components.resize(p, static_cast<Eigen::Index>(keep.size()));
    basis.eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t d = 0; d < keep.size(); ++d) {
        Eigen::VectorXd v = evecs.col(keep[d]).normalized();
        for (Eigen::Index j = 0; j < p; ++j) {
            if (std::abs(v(j)) > 1e-12) {
                if (v(j) < 0) v = -v;
                break;
            }
        }
        basis.components.col(static_cast<Eigen::Index>(d)) = root_p * v;
        basis.eigenvalues(static_cast<Eigen::Index>(d)) = std::max(0.0, evals(keep[d]));
    }
    return basis;
}

/// theta_{i,lambda} = <X_i, Phi_lambda>_p for each requested row, using the
/// raw curve (center = false) or X_i minus the fitted mean (center = true).
/// Rows that were used to fit the basis are accepted but reported on stderr.
inline FeatureMatrix pca_project(const CurveSet& curves, const PCABasis& basis, const IndexList& rows, bool center = false) {
    if (basis.p() != curves.p())
        throw InvalidArgument("basis width " + std::to_string(basis.p()) + " does not match curve length " +
                              std::to_string(curves.p()));
    FeatureMatrix fm;
    fm.basis_kind = BasisKind::PCA;
    fm.source_rows = rows;
    for (Index d = 0; d < basis.size(); ++d) fm.level_index.emplace_back(PcRank{static_cast<int>(d + 1)});

    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd x(m, static_cast<Eigen::Index>(curves.p()));
    std::size_t overlap = 0;
    for (Eigen::Index r = 0; r < m; ++r) {
        const Index i = rows[static_cast<Index>(r)];
        if (i >= curves.n()) throw InvalidArgument("row index " + std::to_string(i) + " out of range");
        if (std::find(basis.fit_indices.begin(), basis.fit_indices.end(), i) != basis.fit_indices.end()) ++overlap;
        x.row(r) = curves.row(i);
        if (center) x.row(r) -= basis.mean_curve.transpose();
    }
    if (overlap)
        std::clog << "warning: " << overlap << " projected row(s) were used to fit the PCA basis\n";
    fm.coeffs = (x * basis.components) / static_cast<double>(curves.p());
    return fm;
}

/// Smallest number of leading components whose eigenvalue mass reaches
/// `fraction` of the total.
inline Index pca_components_for_variance(const PCABasis& basis, double fraction) {
    const double total = basis.eigenvalues.sum();
    if (total <= 0.0) return 0;
    double acc = 0.0;
    for (Index d = 0; d < basis.size(); ++d) {
        acc += basis.eigenvalues(static_cast<Eigen::Index>(d));
        if (acc >= fraction * total) return d + 1;
    }
    return basis.size();
}

/// Feature matrix restricted to the given columns, in the given order.
inline FeatureMatrix select_columns(const FeatureMatrix& fm, const std::vector<std::size_t>& columns) {
    FeatureMatrix out;
    out.basis_kind = fm.basis_kind;
    out.source_rows = fm.source_rows;
    out.coeffs.resize(fm.coeffs.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] >= fm.width()) throw InvalidArgument("feature column out of range");
        out.coeffs.col(static_cast<Eigen::Index>(c)) = fm.coeffs.col(static_cast<Eigen::Index>(columns[c]));
        out.level_index.push_back(fm.level_index[columns[c]]);
    }
    return out;
}

/// Columns of a Haar feature matrix holding wavelet level l (2^l of them).
inline std::vector<std::size_t> haar_level_columns(int level) {
    std::vector<std::size_t> cols;
    for (int k = 0; k < (1 << level); ++k) cols.push_back(HaarIndex::wavelet(level, k).column());
    return cols;
}

} // namespace fdo
