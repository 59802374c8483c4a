#pragma once

// End-to-end experiment: project curves, build each feature set, score the
// test days with LOF and compare flagged days with the ground truth.

#include "fdo/basis.hpp"
#include "fdo/curves.hpp"
#include "fdo/error.hpp"
#include "fdo/lof.hpp"
#include "fdo/selection.hpp"
#include "fdo/twosample.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fdo {

/// Feature sets 0-10:
///   0 raw data            1 full PCA             2 leading PCA (95% variance)
///   3 full Haar           4 Haar scaling+levels 0-2 (8 coefficients)
///   5 Haar level 3 (8)    6 Haar level 4 (16)
///   7 PCA + W2 selection  8 PCA + Winf selection
///   9 Haar + W2 selection 10 Haar + Winf selection
struct FeatureSetSpec {
    int id = 0;
    std::string name;
    BasisKind basis = BasisKind::Haar;
    bool raw = false;
    std::optional<TestKind> selection;  ///< sets 7-10
};

inline constexpr int kFeatureSetCount = 11;

inline FeatureSetSpec feature_set(int id) {
    static const std::array<const char*, kFeatureSetCount> names = {
        "raw", "pca-full", "pca-95", "haar-full", "haar-lev012", "haar-lev3", "haar-lev4",
        "pca-w2", "pca-winf", "haar-w2", "haar-winf"};
    if (id < 0 || id >= kFeatureSetCount) throw InvalidArgument("feature set id must lie in 0..10, got " + std::to_string(id));
    FeatureSetSpec s;
    s.id = id;
    s.name = names[static_cast<std::size_t>(id)];
    s.raw = id == 0;
    s.basis = (id == 1 || id == 2 || id == 7 || id == 8) ? BasisKind::PCA : BasisKind::Haar;
    if (id == 7 || id == 9) s.selection = TestKind::W2;
    if (id == 8 || id == 10) s.selection = TestKind::Winf;
    return s;
}

inline std::vector<int> all_feature_sets() {
    std::vector<int> ids(kFeatureSetCount);
    for (int i = 0; i < kFeatureSetCount; ++i) ids[static_cast<std::size_t>(i)] = i;
    return ids;
}

struct PipelineOptions {
    std::vector<int> sets = all_feature_sets();
    std::size_t lof_k = 10;
    std::vector<double> thresholds = {2.0, 4.0};
    double alpha = 0.05;
    bool fdr_control = true;
    bool include_nominal_neighbors = false;  ///< nominal rows join the LOF neighbourhoods
    bool standardize = false;                ///< divide features by their nominal sd
    bool pca_center = false;
    double variance_fraction = 0.95;
};

struct ThresholdOutcome {
    double threshold = 0.0;
    std::vector<Index> detected;  ///< curve indices with LOF > threshold
    Index true_positives = 0;
    Index false_alarms = 0;
};

struct FeatureSetReport {
    FeatureSetSpec spec;
    std::size_t n_features = 0;
    std::vector<std::string> feature_labels;
    std::optional<SelectionResult> selection;
    std::vector<Index> scored_rows;  ///< test curves, ascending
    std::vector<double> lof;         ///< aligned with scored_rows
    std::vector<ThresholdOutcome> outcomes;
    /// min LOF over true anomalies - max LOF over other scored days.
    std::optional<double> margin;
};

struct PipelineReport {
    std::vector<FeatureSetReport> sets;
    std::optional<std::vector<Index>> ground_truth;
    PipelineOptions options;
};

namespace detail {

/// Coordinates handed to LOF for one feature set.
struct FeatureBlock {
    Eigen::MatrixXd coords;  ///< one row per entry of `rows`
    IndexList rows;
    std::vector<std::string> labels;
    std::optional<SelectionResult> selection;
};

inline FeatureBlock block_from(const FeatureMatrix& fm, const std::vector<std::size_t>& columns) {
    const auto sub = select_columns(fm, columns);
    FeatureBlock b;
    b.coords = sub.coeffs;
    b.rows = sub.source_rows;
    for (const auto& l : sub.level_index) b.labels.push_back(level_label(l));
    return b;
}

inline std::vector<std::size_t> iota_columns(std::size_t first, std::size_t count) {
    std::vector<std::size_t> c(count);
    for (std::size_t i = 0; i < count; ++i) c[i] = first + i;
    return c;
}

/// Shared per-run projections, computed once and reused by every set.
struct Projections {
    std::optional<FeatureMatrix> haar;
    std::optional<PCABasis> pca_basis;
    std::optional<FeatureMatrix> pca;  ///< holdout nominal rows + test rows
};

inline IndexList merged_rows(const IndexList& a, const IndexList& b) {
    IndexList out = a;
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    return out;
}

inline FeatureBlock build_block(const FeatureSetSpec& spec, const CurveSet& curves, const SplitLabels& split,
                                const PipelineOptions& opt, Projections& proj, const BridgeTables& tables) {
    if (spec.raw) {
        FeatureBlock b;
        b.coords = curves.values();
        for (Index i = 0; i < curves.n(); ++i) b.rows.push_back(i);
        for (Index j = 0; j < curves.p(); ++j) b.labels.push_back("t" + std::to_string(j));
        return b;
    }
    if (spec.basis == BasisKind::Haar) {
        if (!proj.haar) proj.haar = haar_project(curves);
        const auto& fm = *proj.haar;
        switch (spec.id) {
        case 3: return block_from(fm, iota_columns(0, fm.width()));
        case 4:
            if (fm.width() < 8) throw UnsupportedShapeError("set 4 needs at least 8 samples per curve");
            return block_from(fm, iota_columns(0, 8));
        case 5:
        case 6: {
            const int level = spec.id == 5 ? 3 : 4;
            if (fm.width() < (std::size_t{2} << level))
                throw UnsupportedShapeError("Haar level " + std::to_string(level) + " needs at least " +
                                            std::to_string(std::size_t{2} << level) + " samples per curve");
            return block_from(fm, haar_level_columns(level));
        }
        default: break;
        }
        const auto sel = select_levels(fm, split, {*spec.selection, opt.alpha, opt.fdr_control}, tables);
        auto b = block_from(fm, sel.rejected_levels);
        b.selection = sel;
        return b;
    }

    if (!proj.pca_basis) {
        proj.pca_basis = pca_fit(curves, split);
        proj.pca = pca_project(curves, *proj.pca_basis, merged_rows(split.pca_holdout_indices(), split.test_indices()),
                               opt.pca_center);
    }
    const auto& fm = *proj.pca;
    switch (spec.id) {
    case 1: return block_from(fm, iota_columns(0, fm.width()));
    case 2: return block_from(fm, iota_columns(0, pca_components_for_variance(*proj.pca_basis, opt.variance_fraction)));
    default: break;
    }
    const auto sel = select_levels(fm, split, {*spec.selection, opt.alpha, opt.fdr_control}, tables);
    auto b = block_from(fm, sel.rejected_levels);
    b.selection = sel;
    return b;
}

} // namespace detail

inline FeatureSetReport run_feature_set(int id, const CurveSet& curves, const SplitLabels& split,
                                        const std::optional<std::vector<Index>>& truth, const PipelineOptions& opt,
                                        detail::Projections& proj, const BridgeTables& tables) {
    FeatureSetReport rep;
    rep.spec = feature_set(id);
    detail::FeatureBlock block;
    try {
        block = detail::build_block(rep.spec, curves, split, opt, proj, tables);
    } catch (const Error& e) {
        throw Error("feature set " + std::to_string(id) + " (" + rep.spec.name + "): " + e.what());
    }
    rep.n_features = static_cast<std::size_t>(block.coords.cols());
    rep.feature_labels = block.labels;
    rep.selection = block.selection;

    // Rows available to LOF: test rows, plus the nominal rows this set may
    // use when nominal neighbours are enabled.
    const IndexList& test = split.test_indices();
    IndexList eligible_nominal =
        rep.spec.basis == BasisKind::PCA && !rep.spec.raw ? split.pca_holdout_indices() : split.nominal_indices();
    IndexList lof_rows = opt.include_nominal_neighbors ? detail::merged_rows(test, eligible_nominal) : test;

    std::vector<Eigen::Index> pos_of(curves.n(), -1);
    for (Index r = 0; r < block.rows.size(); ++r) pos_of[block.rows[r]] = static_cast<Eigen::Index>(r);

    Eigen::MatrixXd coords = block.coords;
    if (opt.standardize && coords.cols() > 0) {
        for (Eigen::Index c = 0; c < coords.cols(); ++c) {
            double mean = 0.0, ss = 0.0;
            for (Index i : eligible_nominal) mean += coords(pos_of[i], c);
            mean /= static_cast<double>(eligible_nominal.size());
            for (Index i : eligible_nominal) ss += (coords(pos_of[i], c) - mean) * (coords(pos_of[i], c) - mean);
            const double sd = std::sqrt(ss / static_cast<double>(eligible_nominal.size() - 1));
            if (sd > 0.0) coords.col(c) /= sd;
        }
    }

    if (opt.lof_k >= lof_rows.size())
        throw InvalidArgument("feature set " + std::to_string(id) + ": k = " + std::to_string(opt.lof_k) +
                              " needs more than k scored rows");

    std::vector<double> all_scores(lof_rows.size(), 1.0);
    if (rep.n_features > 0) {
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(lof_rows.size()), coords.cols());
        for (Index r = 0; r < lof_rows.size(); ++r) {
            if (pos_of[lof_rows[r]] < 0) throw Error("feature set " + std::to_string(id) + " lacks curve " + std::to_string(lof_rows[r]));
            pts.row(static_cast<Eigen::Index>(r)) = coords.row(pos_of[lof_rows[r]]);
        }
        all_scores = lof_scores(make_point_set(std::move(pts)), opt.lof_k).scores;
    }
    // With no selected feature every point coincides, which the duplicate
    // rule scores as LOF = 1.

    std::vector<bool> is_truth(curves.n(), false);
    if (truth)
        for (Index d : *truth)
            if (d < curves.n()) is_truth[d] = true;

    for (Index r = 0; r < lof_rows.size(); ++r) {
        if (!std::binary_search(test.begin(), test.end(), lof_rows[r])) continue;
        rep.scored_rows.push_back(lof_rows[r]);
        rep.lof.push_back(all_scores[r]);
    }

    for (double thr : opt.thresholds) {
        ThresholdOutcome o;
        o.threshold = thr;
        for (Index r = 0; r < rep.scored_rows.size(); ++r) {
            if (rep.lof[r] > thr) {
                o.detected.push_back(rep.scored_rows[r]);
                (is_truth[rep.scored_rows[r]] ? o.true_positives : o.false_alarms)++;
            }
        }
        rep.outcomes.push_back(std::move(o));
    }

    if (truth) {
        double min_out = std::numeric_limits<double>::infinity();
        double max_in = -std::numeric_limits<double>::infinity();
        bool any_out = false, any_in = false;
        for (Index r = 0; r < rep.scored_rows.size(); ++r) {
            if (is_truth[rep.scored_rows[r]]) {
                min_out = std::min(min_out, rep.lof[r]);
                any_out = true;
            } else {
                max_in = std::max(max_in, rep.lof[r]);
                any_in = true;
            }
        }
        if (any_out && any_in) rep.margin = min_out - max_in;
    }
    return rep;
}

inline PipelineReport run_pipeline(const CurveSet& curves, const SplitLabels& split,
                                   const std::optional<std::vector<Index>>& truth, const PipelineOptions& opt,
                                   const BridgeTables& tables) {
    if (split.n() != curves.n()) throw InvalidArgument("split does not match the number of curves");
    if (opt.thresholds.empty()) throw InvalidArgument("at least one LOF threshold is required");
    PipelineReport report;
    report.ground_truth = truth;
    report.options = opt;
    std::vector<int> ids = opt.sets;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    detail::Projections proj;
    for (int id : ids) report.sets.push_back(run_feature_set(id, curves, split, truth, opt, proj, tables));
    return report;
}

} // namespace fdo
