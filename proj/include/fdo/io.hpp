#pragma once

// File formats: feature matrices with JSON sidecars, PCA bases, selection
// results, LOF scores, pipeline reports and study tables.

#include "fdo/basis.hpp"
#include "fdo/curves.hpp"
#include "fdo/error.hpp"
#include "fdo/lof.hpp"
#include "fdo/pipeline.hpp"
#include "fdo/selection.hpp"
#include "fdo/simgen.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace fdo {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "fdoutlier";
inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return in;
}

/// JSON has no infinities; they become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string csv_number(double v) { return std::isfinite(v) ? detail::format_double(v) : (v > 0 ? "inf" : v < 0 ? "-inf" : "nan"); }

inline void write_json(const json& j, const std::string& path) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

} // namespace detail

// ---------------------------------------------------------------------------
// Level identifiers

/// Inverse of level_label: "scaling", "wL.K" or "pcN".
inline LevelId parse_level_label(std::string_view s) {
    auto as_int = [&](std::string_view t) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || v < 0)
            throw FormatError("bad level label '" + std::string(s) + "'");
        return v;
    };
    if (s == "scaling") return HaarIndex::make_scaling();
    if (s.starts_with("pc")) {
        const int r = as_int(s.substr(2));
        if (r < 1) throw FormatError("bad level label '" + std::string(s) + "'");
        return PcRank{r};
    }
    if (s.starts_with("w")) {
        const auto dot = s.find('.');
        if (dot == std::string_view::npos) throw FormatError("bad level label '" + std::string(s) + "'");
        const int l = as_int(s.substr(1, dot - 1));
        const int k = as_int(s.substr(dot + 1));
        if (l > 30 || k >= (1 << l)) throw FormatError("bad level label '" + std::string(s) + "'");
        return HaarIndex::wavelet(l, k);
    }
    throw FormatError("bad level label '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Feature matrices

/// CSV: header of level labels, one row per source curve.
inline void write_feature_csv(std::ostream& out, const FeatureMatrix& fm) {
    std::vector<std::string> header;
    for (const auto& l : fm.level_index) header.push_back(level_label(l));
    write_numeric_csv(out, fm.coeffs, header);
}

inline json feature_sidecar(const FeatureMatrix& fm, const PCABasis* basis = nullptr) {
    json j;
    j["basis"] = to_string(fm.basis_kind);
    j["rows"] = fm.rows();
    j["levels"] = json::array();
    for (const auto& l : fm.level_index) j["levels"].push_back(level_label(l));
    j["source_rows"] = fm.source_rows;
    if (basis) {
        json ev = json::array();
        for (Eigen::Index i = 0; i < basis->eigenvalues.size(); ++i) ev.push_back(basis->eigenvalues(i));
        j["eigenvalues"] = ev;
        j["fit_indices"] = basis->fit_indices;
    }
    return j;
}

inline void save_feature_matrix(const FeatureMatrix& fm, const std::string& csv_path, const std::string& json_path,
                                const PCABasis* basis = nullptr) {
    auto out = detail::open_out(csv_path);
    write_feature_csv(out, fm);
    detail::write_json(feature_sidecar(fm, basis), json_path);
}

inline FeatureMatrix load_feature_matrix(const std::string& csv_path, const std::string& json_path) {
    auto in = detail::open_in(csv_path);
    std::vector<std::string> header;
    FeatureMatrix fm;
    fm.coeffs = read_numeric_csv(in, true, &header);
    auto jin = detail::open_in(json_path);
    json j;
    try {
        j = json::parse(jin);
        fm.basis_kind = j.at("basis").get<std::string>() == "pca" ? BasisKind::PCA : BasisKind::Haar;
        for (const auto& l : j.at("levels")) fm.level_index.push_back(parse_level_label(l.get<std::string>()));
        fm.source_rows = j.at("source_rows").get<IndexList>();
    } catch (const json::exception& e) {
        throw FormatError("sidecar '" + json_path + "': " + e.what());
    }
    if (fm.level_index.size() != static_cast<std::size_t>(fm.coeffs.cols()) ||
        fm.source_rows.size() != static_cast<std::size_t>(fm.coeffs.rows()))
        throw FormatError("sidecar '" + json_path + "' does not match '" + csv_path + "'");
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] != level_label(fm.level_index[c]))
            throw FormatError("column " + std::to_string(c + 1) + " of '" + csv_path + "' is '" + header[c] +
                              "', sidecar says '" + level_label(fm.level_index[c]) + "'");
    return fm;
}

/// CSV: column "mean" then one column per component ("pc1", ...), p rows.
inline void save_pca_basis(const PCABasis& basis, const std::string& csv_path, const std::string& json_path) {
    Eigen::MatrixXd m(basis.components.rows(), basis.components.cols() + 1);
    m.col(0) = basis.mean_curve;
    m.rightCols(basis.components.cols()) = basis.components;
    std::vector<std::string> header{"mean"};
    for (Index k = 0; k < basis.size(); ++k) header.push_back("pc" + std::to_string(k + 1));
    auto out = detail::open_out(csv_path);
    write_numeric_csv(out, m, header);

    json j;
    j["basis"] = "pca";
    j["samples"] = basis.p();
    j["components"] = basis.size();
    json ev = json::array();
    for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i) ev.push_back(basis.eigenvalues(i));
    j["eigenvalues"] = ev;
    j["fit_indices"] = basis.fit_indices;
    detail::write_json(j, json_path);
}

// ---------------------------------------------------------------------------
// Selection

inline json selection_json(const SelectionResult& r, const std::vector<LevelId>& levels) {
    if (levels.size() != r.p_values.size()) throw InvalidArgument("one level id per p-value is required");
    json j;
    j["test"] = to_string(r.test_kind);
    j["alpha"] = r.alpha;
    j["fdr_control"] = r.fdr_controlled;
    j["k_star"] = r.k_star;
    j["levels"] = json::array();
    for (std::size_t i = 0; i < levels.size(); ++i)
        j["levels"].push_back({{"level_id", level_label(levels[i])}, {"p_value", r.p_values[i]}, {"rejected", r.is_rejected(i)}});
    return j;
}

/// Columns: level_id, p_value, rejected (0/1).
inline void write_selection_csv(std::ostream& out, const SelectionResult& r, const std::vector<LevelId>& levels) {
    if (levels.size() != r.p_values.size()) throw InvalidArgument("one level id per p-value is required");
    out << "level_id,p_value,rejected\n";
    for (std::size_t i = 0; i < levels.size(); ++i)
        out << level_label(levels[i]) << ',' << detail::format_double(r.p_values[i]) << ',' << (r.is_rejected(i) ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// LOF

/// Columns: id, lof, kdist, lrd. An infinite lrd is written "inf".
inline void write_lof_csv(std::ostream& out, const LOFScores& s, const std::vector<std::string>& ids) {
    if (ids.size() != s.scores.size()) throw InvalidArgument("one id per LOF score is required");
    out << "id,lof,kdist,lrd\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << ids[i] << ',' << detail::format_double(s.scores[i]) << ',' << detail::format_double(s.kdist[i]) << ','
            << detail::csv_number(s.lrd[i]) << '\n';
}

inline json lof_json(const LOFScores& s, const std::vector<std::string>& ids, const std::vector<double>& thresholds) {
    if (ids.size() != s.scores.size()) throw InvalidArgument("one id per LOF score is required");
    json j;
    j["k"] = s.k;
    j["points"] = json::array();
    for (std::size_t i = 0; i < ids.size(); ++i)
        j["points"].push_back({{"id", ids[i]}, {"lof", s.scores[i]}, {"kdist", s.kdist[i]}, {"lrd", detail::number(s.lrd[i])}});
    j["flagged"] = json::array();
    for (double t : thresholds) {
        json ids_above = json::array();
        for (Index i : flag_above(s.scores, t)) ids_above.push_back(ids[i]);
        j["flagged"].push_back({{"threshold", t}, {"ids", ids_above}});
    }
    return j;
}

// ---------------------------------------------------------------------------
// Telemetry

inline json telemetry_config_json(const TelemetryConfig& cfg) {
    json j;
    j["n_days"] = cfg.n_days;
    j["samples_per_day"] = cfg.samples_per_day;
    j["noise_sd"] = cfg.noise_sd;
    j["year_length"] = cfg.year_length;
    j["bump_amplitude"] = cfg.bump_amplitude;
    j["seasonal_modulation"] = cfg.seasonal_modulation;
    j["baseline_drift"] = cfg.baseline_drift;
    j["local_width"] = cfg.local_width;
    j["seed"] = cfg.seed;
    j["anomalies"] = json::array();
    for (const auto& a : cfg.anomaly_specs)
        j["anomalies"].push_back({{"day_index", a.day},
                                  {"day_number", a.day + 1},
                                  {"kind", to_string(a.kind)},
                                  {"magnitude", a.magnitude},
                                  {"start", a.start}});
    return j;
}

/// Columns: day_index (0-based), day_number (1-based), kind, magnitude, start.
inline void write_truth_csv(std::ostream& out, const TelemetryConfig& cfg) {
    auto specs = cfg.anomaly_specs;
    std::sort(specs.begin(), specs.end(), [](const AnomalySpec& a, const AnomalySpec& b) { return a.day < b.day; });
    out << "day_index,day_number,kind,magnitude,start\n";
    for (const auto& a : specs)
        out << a.day << ',' << a.day + 1 << ',' << to_string(a.kind) << ',' << detail::format_double(a.magnitude) << ','
            << detail::format_double(a.start) << '\n';
}

/// Reads the first column of a truth file (header optional) as 0-based days.
inline std::vector<Index> read_truth_csv(std::istream& in) {
    std::vector<Index> days;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const auto cells = detail::split_commas(body);
        const auto cell = detail::trim(cells.front());
        Index v = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            if (row == 1 && days.empty()) continue;  // header
            throw ParseError(row, 1, std::string(cell));
        }
        days.push_back(v);
    }
    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());
    return days;
}

// ---------------------------------------------------------------------------
// Pipeline

inline json pipeline_options_json(const PipelineOptions& o) {
    json j;
    j["sets"] = o.sets;
    j["lof_k"] = o.lof_k;
    j["thresholds"] = o.thresholds;
    j["alpha"] = o.alpha;
    j["fdr_control"] = o.fdr_control;
    j["include_nominal_neighbors"] = o.include_nominal_neighbors;
    j["standardize"] = o.standardize;
    j["pca_center"] = o.pca_center;
    j["variance_fraction"] = o.variance_fraction;
    return j;
}

/// Deterministic: no timestamps or host data, so equal inputs give equal bytes.
inline json pipeline_report_json(const PipelineReport& r, const CurveSet& curves, const SplitLabels& split, json run) {
    json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    run["curves"] = curves.n();
    run["samples_per_curve"] = curves.p();
    run["nominal"] = split.nominal_indices();
    run["options"] = pipeline_options_json(r.options);
    j["run"] = std::move(run);
    if (r.ground_truth) {
        json gt = json::array();
        for (Index d : *r.ground_truth) gt.push_back({{"day_index", d}, {"day_number", d + 1}});
        j["ground_truth"] = gt;
    } else {
        j["ground_truth"] = nullptr;
    }
    j["feature_sets"] = json::array();
    for (const auto& s : r.sets) {
        json fs;
        fs["id"] = s.spec.id;
        fs["name"] = s.spec.name;
        fs["n_features"] = s.n_features;
        fs["features"] = s.feature_labels;
        if (s.selection) {
            json sel;
            sel["test"] = to_string(s.selection->test_kind);
            sel["alpha"] = s.selection->alpha;
            sel["fdr_control"] = s.selection->fdr_controlled;
            sel["k_star"] = s.selection->k_star;
            json pv = json::array();
            for (double p : s.selection->p_values) pv.push_back(p);
            sel["p_values"] = pv;
            fs["selection"] = sel;
        }
        fs["thresholds"] = json::array();
        for (const auto& o : s.outcomes) {
            json t;
            t["threshold"] = o.threshold;
            t["detected"] = o.detected;
            if (r.ground_truth) {
                t["true_positives"] = o.true_positives;
                t["false_alarms"] = o.false_alarms;
            }
            fs["thresholds"].push_back(t);
        }
        fs["margin"] = s.margin ? detail::number(*s.margin) : json(nullptr);
        j["feature_sets"].push_back(fs);
    }
    return j;
}

/// Long format, one row per (feature set, scored day). Columns: set_id,
/// set_name, day_index, day_id, lof, is_truth (empty without ground truth).
inline void write_pipeline_scores_csv(std::ostream& out, const PipelineReport& r, const CurveSet& curves) {
    out << "set_id,set_name,day_index,day_id,lof,is_truth\n";
    for (const auto& s : r.sets) {
        for (std::size_t i = 0; i < s.scored_rows.size(); ++i) {
            const Index d = s.scored_rows[i];
            out << s.spec.id << ',' << s.spec.name << ',' << d << ',' << curves.curve_ids()[d] << ','
                << detail::format_double(s.lof[i]) << ',';
            if (r.ground_truth)
                out << (std::binary_search(r.ground_truth->begin(), r.ground_truth->end(), d) ? 1 : 0);
            out << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Studies

inline json study_config_json(const StudyConfig& c) {
    json j;
    j["group_size"] = c.group_size;
    j["replications"] = c.replications;
    j["alpha"] = c.alpha;
    j["distribution"] = to_string(c.distribution);
    if (c.distribution == Distribution::Exponential) j["rate"] = c.rate;
    j["mu"] = c.mu;
    j["sigma2"] = c.sigma2;
    j["seed"] = c.seed;
    return j;
}

/// Columns: distribution, test, n, m, alpha, alpha_hat, se.
inline void write_level_csv(std::ostream& out, const StudyConfig& c, const std::vector<std::pair<TestKind, LevelEstimate>>& rows) {
    out << "distribution,test,n,m,alpha,alpha_hat,se\n";
    for (const auto& [kind, e] : rows)
        out << to_string(c.distribution) << ',' << to_string(kind) << ',' << c.group_size << ',' << e.replications << ','
            << detail::format_double(c.alpha) << ',' << detail::format_double(e.alpha_hat) << ',' << detail::format_double(e.standard_error) << '\n';
}

/// Columns: test, alpha, fpr, tpr.
inline void write_roc_csv(std::ostream& out, const std::vector<RocCurve>& curves) {
    out << "test,alpha,fpr,tpr\n";
    for (const auto& c : curves)
        for (const auto& p : c.points)
            out << to_string(c.kind) << ',' << detail::format_double(p.alpha) << ',' << detail::format_double(p.fpr) << ','
                << detail::format_double(p.tpr) << '\n';
}

/// Columns: replication, u, v, r, fdp.
inline void write_fdr_csv(std::ostream& out, const FdrStudyResult& res) {
    out << "replication,u,v,r,fdp\n";
    for (std::size_t i = 0; i < res.replications.size(); ++i) {
        const auto& row = res.replications[i];
        const double fdp = static_cast<double>(row.v) / static_cast<double>(std::max<Index>(row.r, 1));
        out << i << ',' << row.u << ',' << row.v << ',' << row.r << ',' << detail::format_double(fdp) << '\n';
    }
}

} // namespace fdo
