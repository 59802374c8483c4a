#pragma once

// Per-level two-sample testing of nominal against test coefficients, and
// Benjamini-Hochberg selection of the levels that differ.

#include "fdo/basis.hpp"
#include "fdo/curves.hpp"
#include "fdo/error.hpp"
#include "fdo/twosample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

namespace fdo {

struct LevelSamples {
    LevelId level;
    Sample nominal_sample;  ///< reference F_lambda^(0)
    Sample test_sample;     ///< compared   F_lambda^(1)
};

struct SelectionResult {
    std::vector<double> p_values;
    std::vector<std::size_t> rejected_levels;  ///< positions into p_values, ascending
    double alpha = 0.05;
    std::size_t k_star = 0;
    TestKind test_kind = TestKind::W2;
    bool fdr_controlled = true;

    bool is_rejected(std::size_t level) const {
        return std::binary_search(rejected_levels.begin(), rejected_levels.end(), level);
    }
};

inline constexpr double kMinReportedPValue = 1e-16;

/// Splits each coefficient column into its nominal and test samples. For
/// Haar every nominal row is used; for PCA only the nominal rows that did not
/// fit the basis (positions 0, 2, 4, ... of the nominal list).
inline std::vector<LevelSamples> split_features(const FeatureMatrix& features, const SplitLabels& split) {
    std::unordered_map<Index, Index> position;
    for (Index r = 0; r < features.source_rows.size(); ++r) position.emplace(features.source_rows[r], r);

    IndexList nominal_rows;
    if (features.basis_kind == BasisKind::PCA) {
        for (Index fit : split.pca_fit_indices())
            if (position.count(fit))
                throw ContaminationError("PCA features include row " + std::to_string(fit) +
                                         ", which was used to fit the basis");
        nominal_rows = split.pca_holdout_indices();
    } else {
        nominal_rows = split.nominal_indices();
    }

    auto gather_rows = [&](const IndexList& rows) {
        IndexList out;
        out.reserve(rows.size());
        for (Index i : rows) {
            const auto it = position.find(i);
            if (it == position.end()) throw InvalidArgument("features do not cover curve " + std::to_string(i));
            out.push_back(it->second);
        }
        return out;
    };
    const IndexList nominal_pos = gather_rows(nominal_rows);
    const IndexList test_pos = gather_rows(split.test_indices());

    std::vector<LevelSamples> levels;
    levels.reserve(features.width());
    for (Index c = 0; c < features.width(); ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        std::vector<double> nom, tst;
        nom.reserve(nominal_pos.size());
        tst.reserve(test_pos.size());
        for (Index r : nominal_pos) nom.push_back(features.coeffs(static_cast<Eigen::Index>(r), col));
        for (Index r : test_pos) tst.push_back(features.coeffs(static_cast<Eigen::Index>(r), col));
        levels.push_back({features.level_index[c], Sample(std::move(nom)), Sample(std::move(tst))});
    }
    return levels;
}

/// One p-value per level. p-values of exactly 0 are raised to 1e-16.
inline std::vector<double> test_all_levels(const std::vector<LevelSamples>& levels, TestKind kind, const BridgeTables& tables) {
    std::vector<double> p(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        try {
            p[i] = two_sample_test(kind, levels[i].nominal_sample, levels[i].test_sample, tables).p_value;
        } catch (const Error& e) {
            throw InvalidArgument("level " + level_label(levels[i].level) + ": " + e.what());
        }
        p[i] = std::max(p[i], kMinReportedPValue);
    }
    return p;
}

namespace detail {
inline void check_p_values(const std::vector<double>& p, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("p-value outside [0, 1]");
}
} // namespace detail

/// Step-up rule: k* is the largest k with p_(k) <= k alpha / m; the k*
/// smallest p-values (by rank, ties broken by level position) are rejected.
inline SelectionResult benjamini_hochberg(const std::vector<double>& p_values, double alpha, TestKind kind = TestKind::W2) {
    detail::check_p_values(p_values, alpha);
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    std::size_t k_star = 0;
    for (std::size_t k = m; k >= 1; --k) {
        if (p_values[order[k - 1]] <= static_cast<double>(k) * alpha / static_cast<double>(m)) {
            k_star = k;
            break;
        }
    }
    SelectionResult r;
    r.p_values = p_values;
    r.alpha = alpha;
    r.k_star = k_star;
    r.test_kind = kind;
    r.rejected_levels.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_star));
    std::sort(r.rejected_levels.begin(), r.rejected_levels.end());
    return r;
}

/// Level-alpha testing of every hypothesis without multiplicity correction
/// (reject p < alpha).
inline SelectionResult uncorrected_selection(const std::vector<double>& p_values, double alpha, TestKind kind = TestKind::W2) {
    detail::check_p_values(p_values, alpha);
    SelectionResult r;
    r.p_values = p_values;
    r.alpha = alpha;
    r.test_kind = kind;
    r.fdr_controlled = false;
    for (std::size_t i = 0; i < p_values.size(); ++i)
        if (p_values[i] < alpha) r.rejected_levels.push_back(i);
    r.k_star = r.rejected_levels.size();
    return r;
}

struct SelectionOptions {
    TestKind test_kind = TestKind::W2;
    double alpha = 0.05;
    bool fdr_control = true;
};

/// split_features, test_all_levels and the selection rule in one call.
inline SelectionResult select_levels(const FeatureMatrix& features, const SplitLabels& split, const SelectionOptions& opt,
                                     const BridgeTables& tables) {
    const auto levels = split_features(features, split);
    const auto p = test_all_levels(levels, opt.test_kind, tables);
    return opt.fdr_control ? benjamini_hochberg(p, opt.alpha, opt.test_kind) : uncorrected_selection(p, opt.alpha, opt.test_kind);
}

} // namespace fdo
