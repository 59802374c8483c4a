#pragma once

// Command-line front end. cli_main returns 0 on success, 1 on usage errors
// (bad flags, bad option values, bad config files) and 2 on data errors.

#include "fdo/basis.hpp"
#include "fdo/config.hpp"
#include "fdo/curves.hpp"
#include "fdo/error.hpp"
#include "fdo/io.hpp"
#include "fdo/lof.hpp"
#include "fdo/pipeline.hpp"
#include "fdo/selection.hpp"
#include "fdo/simgen.hpp"
#include "fdo/twosample.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fdo {

namespace cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2 };

/// Raised while turning flags and config values into settings.
class UsageError : public Error {
public:
    using Error::Error;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::string out;
    std::string format = "csv";
};

/// Flags shared by the commands that read a curve file.
struct InputFlags {
    std::string input;
    bool header = false;
    std::string nominal;
    std::string basis = "haar";
    bool pca_center = false;
};

struct Context {
    Globals globals;
    KeyValueConfig config;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
    std::function<const BridgeTables&()> tables;

    bool json() const { return globals.format == "json"; }

    std::filesystem::path out_dir() const {
        std::filesystem::path dir = globals.out.empty() ? std::filesystem::path(".") : std::filesystem::path(globals.out);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
        return dir;
    }

    std::uint64_t seed(std::uint64_t fallback) const {
        if (globals.seed) return *globals.seed;
        if (auto v = config.get_as<std::uint64_t>("seed")) return *v;
        return fallback;
    }
};

template <class T>
void override_with(T& target, const std::optional<T>& flag) {
    if (flag) target = *flag;
}

inline IndexList parse_nominal(const std::string& text, Index n) {
    if (text.empty()) {
        // Second half of the rows, i.e. days 240-479 for two simulated years.
        IndexList nom;
        for (Index i = n / 2; i < n; ++i) nom.push_back(i);
        return nom;
    }
    try {
        return parse_index_list(text);
    } catch (const Error& e) {
        throw UsageError(std::string("--nominal: ") + e.what());
    }
}

inline std::vector<double> parse_thresholds(const std::string& text) {
    try {
        auto t = detail::parse_double_list(text);
        if (t.empty()) throw UsageError("--thresholds: at least one value is required");
        return t;
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        throw UsageError(std::string("--thresholds: ") + e.what());
    }
}

inline std::vector<TestKind> parse_tests(const std::string& text) {
    std::vector<TestKind> kinds;
    try {
        for (auto cell : detail::split_commas(text)) {
            if (cell == "all") return {TestKind::KS, TestKind::W2, TestKind::Winf};
            kinds.push_back(parse_test_kind(cell));
        }
    } catch (const Error& e) {
        throw UsageError(std::string("--test: ") + e.what());
    }
    if (kinds.empty()) throw UsageError("--test: at least one test is required");
    return kinds;
}

inline BasisKind parse_basis(const std::string& s) {
    if (s == "haar") return BasisKind::Haar;
    if (s == "pca") return BasisKind::PCA;
    throw UsageError("--basis must be haar or pca, got '" + s + "'");
}

inline CurveSet read_curves(const InputFlags& f) {
    if (f.input.empty()) throw UsageError("--input is required");
    return load_csv(f.input, f.header);
}

inline std::string resolve(const Context& ctx, const std::string& name) { return (ctx.out_dir() / name).string(); }

inline TelemetryConfig telemetry_from(const Context& ctx) {
    TelemetryConfig cfg;
    try {
        apply(ctx.config, cfg);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    cfg.seed = ctx.seed(cfg.seed);
    return cfg;
}

inline StudyConfig study_from(const Context& ctx) {
    StudyConfig cfg;
    try {
        apply(ctx.config, cfg);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    cfg.seed = ctx.seed(cfg.seed);
    return cfg;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateFlags {
    std::string truth;
    std::optional<Index> n_days, samples_per_day, year_length;
    std::optional<double> noise_sd;
    std::optional<std::string> anomalies;
};

inline int run_simulate(Context& ctx, const SimulateFlags& f) {
    TelemetryConfig cfg = telemetry_from(ctx);
    override_with(cfg.n_days, f.n_days);
    override_with(cfg.samples_per_day, f.samples_per_day);
    override_with(cfg.year_length, f.year_length);
    override_with(cfg.noise_sd, f.noise_sd);
    if (f.anomalies) {
        try {
            cfg.anomaly_specs = parse_anomaly_list(*f.anomalies);
        } catch (const Error& e) {
            throw UsageError(std::string("--anomalies: ") + e.what());
        }
    }
    try {
        validate(cfg);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const auto tm = generate_telemetry(cfg);

    // --out may name the curve file itself.
    std::string curves_path, truth_path = f.truth;
    const std::filesystem::path out(ctx.globals.out);
    if (out.has_extension() && out.extension() == ".csv") {
        if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
        curves_path = out.string();
    } else {
        curves_path = resolve(ctx, "curves.csv");
        if (truth_path.empty()) truth_path = resolve(ctx, ctx.json() ? "truth.json" : "truth.csv");
    }
    save_csv(tm.curves, curves_path);
    if (!truth_path.empty()) {
        auto o = detail::open_out(truth_path);
        if (ctx.json()) {
            json j;
            j["tool"] = kToolName;
            j["version"] = kToolVersion;
            j["config"] = telemetry_config_json(cfg);
            j["ground_truth"] = tm.ground_truth;
            o << j.dump(2) << '\n';
        } else {
            write_truth_csv(o, cfg);
        }
    }
    *ctx.out << "wrote " << tm.curves.n() << " x " << tm.curves.p() << " curves to " << curves_path;
    if (!truth_path.empty()) *ctx.out << ", " << tm.ground_truth.size() << " anomalous days to " << truth_path;
    *ctx.out << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// project / select

struct Projected {
    FeatureMatrix features;
    std::optional<PCABasis> basis;
};

inline Projected project_curves(const CurveSet& curves, const SplitLabels& split, BasisKind kind, bool center) {
    if (kind == BasisKind::Haar) return {haar_project(curves), std::nullopt};
    auto basis = pca_fit(curves, split);
    auto fm = pca_project(curves, basis, detail::merged_rows(split.pca_holdout_indices(), split.test_indices()), center);
    return {std::move(fm), std::move(basis)};
}

inline SplitLabels split_for(const CurveSet& curves, const std::string& nominal) {
    return make_split(curves.n(), parse_nominal(nominal, curves.n()));
}

inline int run_project(Context& ctx, const InputFlags& in) {
    const auto kind = parse_basis(in.basis);
    const auto curves = read_curves(in);
    const auto split = split_for(curves, in.nominal);
    const auto pr = project_curves(curves, split, kind, in.pca_center);
    save_feature_matrix(pr.features, resolve(ctx, "features.csv"), resolve(ctx, "features.json"),
                        pr.basis ? &*pr.basis : nullptr);
    if (pr.basis) save_pca_basis(*pr.basis, resolve(ctx, "pca_basis.csv"), resolve(ctx, "pca_basis.json"));
    *ctx.out << to_string(kind) << " features: " << pr.features.rows() << " rows x " << pr.features.width() << " levels\n";
    return kOk;
}

struct SelectFlags {
    std::string test = "w2";
    std::optional<double> alpha;
    bool no_fdr = false;
};

inline int run_select(Context& ctx, const InputFlags& in, const SelectFlags& f) {
    const auto kind = parse_basis(in.basis);
    const auto tests = parse_tests(f.test);
    if (tests.size() != 1) throw UsageError("select runs one test at a time");
    double alpha = 0.05;
    try {
        if (auto v = ctx.config.get_as<double>("alpha")) alpha = *v;
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    override_with(alpha, f.alpha);
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("--alpha must lie in [0, 1]");

    const auto curves = read_curves(in);
    const auto split = split_for(curves, in.nominal);
    const auto pr = project_curves(curves, split, kind, in.pca_center);
    const BridgeTables* tables = tests[0] == TestKind::W2 ? &ctx.tables() : nullptr;
    const auto levels = split_features(pr.features, split);
    std::vector<double> p(levels.size());
    if (tables) {
        p = test_all_levels(levels, tests[0], *tables);
    } else {
        // sup-type tests never read the table; skip building it.
        static const BridgeTables unused(std::vector<double>(BridgeTables::kGridSize, 0.0), 0, 0, 0, 0.0, 0.0);
        p = test_all_levels(levels, tests[0], unused);
    }
    const auto sel = f.no_fdr ? uncorrected_selection(p, alpha, tests[0]) : benjamini_hochberg(p, alpha, tests[0]);

    if (ctx.json()) {
        json j = selection_json(sel, pr.features.level_index);
        j["basis"] = to_string(kind);
        detail::write_json(j, resolve(ctx, "selection.json"));
    } else {
        auto o = detail::open_out(resolve(ctx, "selection.csv"));
        write_selection_csv(o, sel, pr.features.level_index);
    }
    *ctx.out << to_string(kind) << '/' << to_string(tests[0]) << ": " << sel.rejected_levels.size() << " of "
             << sel.p_values.size() << " levels selected";
    if (!sel.rejected_levels.empty()) {
        *ctx.out << ':';
        for (auto l : sel.rejected_levels) *ctx.out << ' ' << level_label(pr.features.level_index[l]);
    }
    *ctx.out << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// lof

struct LofFlags {
    std::optional<std::size_t> k;
    std::optional<std::string> thresholds;
};

inline int run_lof(Context& ctx, const InputFlags& in, const LofFlags& f) {
    PipelineOptions defaults;
    try {
        apply(ctx.config, defaults);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    std::size_t k = defaults.lof_k;
    override_with(k, f.k);
    std::vector<double> thresholds = f.thresholds ? parse_thresholds(*f.thresholds) : defaults.thresholds;
    if (k < 1) throw UsageError("--k must be at least 1");

    if (in.input.empty()) throw UsageError("--input is required");
    auto file = detail::open_in(in.input);
    Eigen::MatrixXd pts = read_numeric_csv(file, in.header);
    auto ps = make_point_set(std::move(pts));
    const auto scores = lof_scores(ps, k);
    if (ctx.json()) {
        detail::write_json(lof_json(scores, ps.ids, thresholds), resolve(ctx, "lof_scores.json"));
    } else {
        auto o = detail::open_out(resolve(ctx, "lof_scores.csv"));
        write_lof_csv(o, scores, ps.ids);
    }
    for (double t : thresholds)
        *ctx.out << "LOF > " << t << ": " << flag_above(scores.scores, t).size() << " of " << ps.size() << " points\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineFlags {
    std::string truth;
    std::optional<std::string> sets, thresholds;
    std::optional<std::size_t> k;
    std::optional<double> alpha, variance_fraction;
    bool no_fdr = false, include_nominal = false, standardize = false, pca_center = false;
};

inline int run_pipeline_cmd(Context& ctx, const InputFlags& in, const PipelineFlags& f) {
    PipelineOptions opt;
    try {
        apply(ctx.config, opt);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (f.sets) {
        try {
            opt.sets.clear();
            for (Index id : parse_index_list(*f.sets)) opt.sets.push_back(static_cast<int>(id));
        } catch (const Error& e) {
            throw UsageError(std::string("--sets: ") + e.what());
        }
    }
    for (int id : opt.sets)
        if (id < 0 || id >= kFeatureSetCount) throw UsageError("--sets: feature set ids lie in 0..10, got " + std::to_string(id));
    if (opt.sets.empty()) throw UsageError("--sets: at least one feature set is required");
    if (f.thresholds) opt.thresholds = parse_thresholds(*f.thresholds);
    override_with(opt.lof_k, f.k);
    override_with(opt.alpha, f.alpha);
    override_with(opt.variance_fraction, f.variance_fraction);
    if (f.no_fdr) opt.fdr_control = false;
    if (f.include_nominal) opt.include_nominal_neighbors = true;
    if (f.standardize) opt.standardize = true;
    if (f.pca_center || in.pca_center) opt.pca_center = true;
    if (!(opt.alpha >= 0.0 && opt.alpha <= 1.0)) throw UsageError("--alpha must lie in [0, 1]");
    if (!(opt.variance_fraction > 0.0 && opt.variance_fraction <= 1.0))
        throw UsageError("--variance-fraction must lie in (0, 1]");
    if (opt.lof_k < 1) throw UsageError("--k must be at least 1");

    json run;
    std::optional<CurveSet> curves;
    std::optional<std::vector<Index>> truth;
    if (in.input.empty()) {
        const auto cfg = telemetry_from(ctx);
        try {
            validate(cfg);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        auto tm = generate_telemetry(cfg);
        run["source"] = "simulated";
        run["seed"] = cfg.seed;
        run["telemetry"] = telemetry_config_json(cfg);
        curves = std::move(tm.curves);
        truth = std::move(tm.ground_truth);
    } else {
        curves = read_curves(in);
        run["source"] = "file";
        run["input"] = std::filesystem::path(in.input).filename().string();
        if (!f.truth.empty()) {
            auto t = detail::open_in(f.truth);
            truth = read_truth_csv(t);
        }
    }
    const auto split = split_for(*curves, in.nominal);

    const bool needs_table = std::any_of(opt.sets.begin(), opt.sets.end(), [](int id) { return id == 7 || id == 9; });
    static const BridgeTables unused(std::vector<double>(BridgeTables::kGridSize, 0.0), 0, 0, 0, 0.0, 0.0);
    const BridgeTables& tables = needs_table ? ctx.tables() : unused;
    if (needs_table) {
        run["bridge_table"] = {{"draws", tables.num_draws()}, {"truncation", tables.truncation()}, {"seed", tables.seed()}};
    }

    const auto report = run_pipeline(*curves, split, truth, opt, tables);
    detail::write_json(pipeline_report_json(report, *curves, split, run), resolve(ctx, "report.json"));
    {
        auto o = detail::open_out(resolve(ctx, "lof_scores.csv"));
        write_pipeline_scores_csv(o, report, *curves);
    }

    auto& os = *ctx.out;
    os << "set  name          features";
    for (double t : opt.thresholds) os << "  LOF>" << t << (truth ? " (TP/FA)" : "");
    os << '\n';
    for (const auto& s : report.sets) {
        os << std::setw(3) << s.spec.id << "  " << std::left << std::setw(12) << s.spec.name << std::right << std::setw(10)
           << s.n_features;
        for (const auto& o : s.outcomes) {
            if (truth)
                os << "  " << std::setw(6) << (std::to_string(o.true_positives) + "/" + std::to_string(truth->size()))
                   << " " << std::setw(3) << o.false_alarms;
            else
                os << "  " << std::setw(6) << o.detected.size();
        }
        os << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// studies

struct StudyFlags {
    std::optional<std::string> dist;
    std::optional<Index> n, m;
    std::optional<double> alpha, rate, mu, sigma2;
    std::optional<std::string> test;
};

inline StudyConfig study_with_flags(const Context& ctx, const StudyFlags& f) {
    StudyConfig cfg = study_from(ctx);
    if (f.dist) {
        try {
            cfg.distribution = parse_distribution(*f.dist);
        } catch (const Error& e) {
            throw UsageError(std::string("--dist: ") + e.what());
        }
    }
    override_with(cfg.group_size, f.n);
    override_with(cfg.replications, f.m);
    override_with(cfg.alpha, f.alpha);
    override_with(cfg.rate, f.rate);
    override_with(cfg.mu, f.mu);
    override_with(cfg.sigma2, f.sigma2);
    try {
        validate(cfg);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

inline bool needs_table(const std::vector<TestKind>& kinds) {
    return std::find(kinds.begin(), kinds.end(), TestKind::W2) != kinds.end();
}

inline const BridgeTables& tables_for(Context& ctx, const std::vector<TestKind>& kinds) {
    static const BridgeTables unused(std::vector<double>(BridgeTables::kGridSize, 0.0), 0, 0, 0, 0.0, 0.0);
    return needs_table(kinds) ? ctx.tables() : unused;
}

inline int run_level_study(Context& ctx, const StudyFlags& f) {
    const auto cfg = study_with_flags(ctx, f);
    const auto kinds = parse_tests(f.test.value_or("w2"));
    const auto& tables = tables_for(ctx, kinds);
    std::vector<std::pair<TestKind, LevelEstimate>> rows;
    for (auto k : kinds) rows.emplace_back(k, level_study(cfg, k, tables));

    json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["study"] = "level";
    j["config"] = study_config_json(cfg);
    j["results"] = json::array();
    for (const auto& [k, e] : rows)
        j["results"].push_back({{"test", to_string(k)}, {"alpha_hat", e.alpha_hat}, {"se", e.standard_error}});
    if (!ctx.json()) {
        auto o = detail::open_out(resolve(ctx, "level_study.csv"));
        write_level_csv(o, cfg, rows);
    }
    detail::write_json(j, resolve(ctx, "level_study.json"));
    write_level_csv(*ctx.out, cfg, rows);
    return kOk;
}

inline int run_power_study(Context& ctx, const StudyFlags& f) {
    const auto cfg = study_with_flags(ctx, f);
    const auto kinds = parse_tests(f.test.value_or("all"));
    const auto curves = power_study(cfg, kinds, tables_for(ctx, kinds));

    json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["study"] = "power";
    j["config"] = study_config_json(cfg);
    j["auc"] = json::object();
    for (const auto& c : curves) j["auc"][to_string(c.kind)] = c.auc;
    if (ctx.json()) {
        j["roc"] = json::array();
        for (const auto& c : curves)
            for (const auto& p : c.points)
                j["roc"].push_back({{"test", to_string(c.kind)}, {"alpha", p.alpha}, {"fpr", p.fpr}, {"tpr", p.tpr}});
    } else {
        auto o = detail::open_out(resolve(ctx, "roc.csv"));
        write_roc_csv(o, curves);
    }
    detail::write_json(j, resolve(ctx, "power_study.json"));
    *ctx.out << "test,auc\n";
    for (const auto& c : curves) *ctx.out << to_string(c.kind) << ',' << detail::format_double(c.auc) << '\n';
    return kOk;
}

struct FdrFlags {
    std::optional<Index> hypotheses, m;
    std::optional<double> alpha;
};

inline int run_fdr_study(Context& ctx, const FdrFlags& f) {
    Index hyp = 256, reps = 2000;
    double alpha = 0.05;
    try {
        if (auto v = ctx.config.get_as<Index>("hypotheses")) hyp = *v;
        if (auto v = ctx.config.get_as<Index>("replications")) reps = *v;
        if (auto v = ctx.config.get_as<double>("alpha")) alpha = *v;
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    override_with(hyp, f.hypotheses);
    override_with(reps, f.m);
    override_with(alpha, f.alpha);
    if (hyp < 1 || reps < 1) throw UsageError("--hypotheses and --m must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("--alpha must lie in [0, 1]");
    const auto seed = ctx.seed(1);
    const auto res = fdr_null_study(hyp, reps, alpha, seed);

    json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["study"] = "fdr";
    j["config"] = {{"hypotheses", hyp}, {"replications", reps}, {"alpha", alpha}, {"seed", seed}};
    j["fdr"] = res.fdr;
    j["se"] = res.standard_error;
    j["any_rejection_rate"] = res.any_rejection_rate;
    if (ctx.json()) {
        j["replications"] = json::array();
        for (const auto& r : res.replications) j["replications"].push_back({{"u", r.u}, {"v", r.v}, {"r", r.r}});
    } else {
        auto o = detail::open_out(resolve(ctx, "fdr_study.csv"));
        write_fdr_csv(o, res);
    }
    detail::write_json(j, resolve(ctx, "fdr_study.json"));
    *ctx.out << "hypotheses,replications,alpha,fdr,se,any_rejection\n"
             << hyp << ',' << reps << ',' << detail::format_double(alpha) << ',' << detail::format_double(res.fdr) << ','
             << detail::format_double(res.standard_error) << ',' << detail::format_double(res.any_rejection_rate) << '\n';
    return kOk;
}

} // namespace cli

/// Runs the command line. `tables` supplies the int B^2 table for W2 tests
/// (default: the cached process-wide table).
inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
                    std::function<const BridgeTables&()> tables = {}) {
    using namespace cli;
    CLI::App app{"Semi-supervised outlier detection for functional data", "fdo"};
    app.require_subcommand(1);
    app.fallthrough();

    Context ctx;
    ctx.out = &out;
    ctx.err = &err;
    ctx.tables = tables ? std::move(tables) : std::function<const BridgeTables&()>([]() -> const BridgeTables& {
        return default_bridge_tables();
    });

    app.add_option("--seed", ctx.globals.seed, "Random seed");
    app.add_option("--config", ctx.globals.config_path, "Flat key = value configuration file");
    app.add_option("--out", ctx.globals.out, "Output directory (simulate: may name a .csv file)");
    app.add_option("--format", ctx.globals.format, "Table format")->check(CLI::IsMember({"csv", "json"}));

    InputFlags in;
    auto add_input = [&](CLI::App* sub, bool with_basis) {
        sub->add_option("--input", in.input, "Curve CSV, one curve per row");
        sub->add_flag("--header", in.header, "First input line is a header");
        if (with_basis) {
            sub->add_option("--nominal", in.nominal, "Nominal rows, e.g. 240-479 (default: second half)");
            sub->add_option("--basis", in.basis, "haar or pca")->check(CLI::IsMember({"haar", "pca"}));
            sub->add_flag("--pca-center", in.pca_center, "Subtract the fit-set mean before PCA projection");
        }
    };

    SimulateFlags sim;
    auto* simulate = app.add_subcommand("simulate", "Generate the simulated telemetry and its ground truth");
    simulate->add_option("--truth", sim.truth, "Ground-truth output path");
    simulate->add_option("--n-days", sim.n_days, "Number of days");
    simulate->add_option("--samples-per-day", sim.samples_per_day, "Samples per day (power of two)");
    simulate->add_option("--year-length", sim.year_length, "Days per seasonal cycle");
    simulate->add_option("--noise-sd", sim.noise_sd, "Noise standard deviation");
    simulate->add_option("--anomalies", sim.anomalies, "default, none, or day:kind:magnitude[:start];...");

    auto* project = app.add_subcommand("project", "Project curves on the Haar or PCA basis");
    add_input(project, true);

    SelectFlags self;
    auto* select = app.add_subcommand("select", "Per-level two-sample tests and level selection");
    add_input(select, true);
    select->add_option("--test", self.test, "ks, w2 or winf")->check(CLI::IsMember({"ks", "w2", "winf"}));
    select->add_option("--alpha", self.alpha, "Selection level");
    select->add_flag("--no-fdr", self.no_fdr, "Test each level at alpha without multiplicity correction");

    LofFlags loff;
    auto* lof = app.add_subcommand("lof", "Local Outlier Factor of the rows of a numeric CSV");
    add_input(lof, false);
    lof->add_option("--k", loff.k, "Neighbourhood size");
    lof->add_option("--thresholds", loff.thresholds, "Comma-separated LOF thresholds");

    PipelineFlags pf;
    auto* pipeline = app.add_subcommand("pipeline", "Projection, selection and LOF for feature sets 0-10");
    add_input(pipeline, true);
    pipeline->add_option("--truth", pf.truth, "Ground-truth day list for --input data");
    pipeline->add_option("--sets", pf.sets, "Feature set ids, e.g. 2,7 or 0-10");
    pipeline->add_option("--k", pf.k, "LOF neighbourhood size");
    pipeline->add_option("--thresholds", pf.thresholds, "Comma-separated LOF thresholds");
    pipeline->add_option("--alpha", pf.alpha, "BH level for sets 7-10");
    pipeline->add_option("--variance-fraction", pf.variance_fraction, "Variance share for set 2");
    pipeline->add_flag("--no-fdr", pf.no_fdr, "Select levels without multiplicity correction");
    pipeline->add_flag("--include-nominal-neighbors", pf.include_nominal, "Nominal rows join LOF neighbourhoods");
    pipeline->add_flag("--standardize", pf.standardize, "Divide features by their nominal standard deviation");

    StudyFlags lvl;
    auto* level = app.add_subcommand("level-study", "Monte Carlo level of the two-sample tests");
    auto add_study = [](CLI::App* sub, StudyFlags& s) {
        sub->add_option("--dist", s.dist, "gaussian or exponential")->check(CLI::IsMember({"gaussian", "exponential"}));
        sub->add_option("--n", s.n, "Group size");
        sub->add_option("--m", s.m, "Replications");
        sub->add_option("--alpha", s.alpha, "Nominal level");
        sub->add_option("--rate", s.rate, "Exponential rate");
        sub->add_option("--test", s.test, "ks, w2, winf, a comma list or all");
    };
    add_study(level, lvl);

    StudyFlags pow;
    auto* power = app.add_subcommand("power-study", "ROC curves of the two-sample tests");
    add_study(power, pow);
    power->add_option("--mu", pow.mu, "Alternative mean");
    power->add_option("--sigma2", pow.sigma2, "Alternative variance");

    FdrFlags fdrf;
    auto* fdr = app.add_subcommand("fdr-study", "Benjamini-Hochberg FDR under the full null");
    fdr->add_option("--hypotheses", fdrf.hypotheses, "Hypotheses per replication");
    fdr->add_option("--m", fdrf.m, "Replications");
    fdr->add_option("--alpha", fdrf.alpha, "BH level");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        err << app.help();
        return kUsage;
    }

    try {
        if (!ctx.globals.config_path.empty()) ctx.config = KeyValueConfig::load(ctx.globals.config_path);
        int rc = kOk;
        if (simulate->parsed()) rc = run_simulate(ctx, sim);
        else if (project->parsed()) rc = run_project(ctx, in);
        else if (select->parsed()) rc = run_select(ctx, in, self);
        else if (lof->parsed()) rc = run_lof(ctx, in, loff);
        else if (pipeline->parsed()) rc = run_pipeline_cmd(ctx, in, pf);
        else if (level->parsed()) rc = run_level_study(ctx, lvl);
        else if (power->parsed()) rc = run_power_study(ctx, pow);
        else if (fdr->parsed()) rc = run_fdr_study(ctx, fdrf);
        for (const auto& key : ctx.config.unused_keys())
            err << "warning: config key '" << key << "' is not used by this command\n";
        return rc;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    }
}

} // namespace fdo
