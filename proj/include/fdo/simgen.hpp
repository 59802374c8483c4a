#pragma once

// Seeded generators: simulated daily telemetry with ground-truth anomalies,
// and the Monte Carlo level, power and FDR studies for the two-sample tests.

#include "fdo/curves.hpp"
#include "fdo/error.hpp"
#include "fdo/random.hpp"
#include "fdo/selection.hpp"
#include "fdo/twosample.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace fdo {

// ---------------------------------------------------------------------------
// Telemetry

enum class AnomalyKind { PatternChange, AmplitudeChange, LocalNoise, LocalSpike, DefaultValue, DoublePeriod };

inline const char* to_string(AnomalyKind k) {
    switch (k) {
    case AnomalyKind::PatternChange: return "pattern_change";
    case AnomalyKind::AmplitudeChange: return "amplitude_change";
    case AnomalyKind::LocalNoise: return "local_noise";
    case AnomalyKind::LocalSpike: return "local_spike";
    case AnomalyKind::DefaultValue: return "default_value";
    case AnomalyKind::DoublePeriod: return "double_period";
    }
    return "?";
}

inline AnomalyKind parse_anomaly_kind(std::string_view s) {
    for (auto k : {AnomalyKind::PatternChange, AnomalyKind::AmplitudeChange, AnomalyKind::LocalNoise,
                   AnomalyKind::LocalSpike, AnomalyKind::DefaultValue, AnomalyKind::DoublePeriod})
        if (s == to_string(k)) return k;
    throw InvalidArgument("unknown anomaly kind '" + std::string(s) + "'");
}

/// One anomalous day. `magnitude` means:
///   PatternChange   blend weight of the alternate pattern (1 = full swap)
///   AmplitudeChange factor applied to the daily bump
///   LocalNoise      factor applied to the noise sd on the local window
///   LocalSpike      height of the spike added at the window start
///   DefaultValue    constant held on the local window
///   DoublePeriod    amplitude factor of the two half-length bumps
/// `start` places local anomalies inside the day (fraction of the day).
struct AnomalySpec {
    Index day = 0;
    AnomalyKind kind = AnomalyKind::PatternChange;
    double magnitude = 1.0;
    double start = 0.5;
};

/// Placement used by default: pattern anomalies on days 6, 26, 70, 220, local
/// anomalies on days 134, 156, 201 and a periodicity anomaly on day 98, read
/// as 1-based day numbers (stored 0-based).
inline std::vector<AnomalySpec> default_anomalies() {
    return {
        {5, AnomalyKind::AmplitudeChange, 1.25, 0.0},
        {25, AnomalyKind::PatternChange, 0.5, 0.0},
        {69, AnomalyKind::PatternChange, 1.0, 0.0},
        {219, AnomalyKind::AmplitudeChange, 1.6, 0.0},
        {97, AnomalyKind::DoublePeriod, 1.0, 0.0},
        {133, AnomalyKind::LocalNoise, 6.0, 0.3125},
        {155, AnomalyKind::LocalSpike, 0.6, 0.5625},
        {200, AnomalyKind::DefaultValue, 0.5, 0.4375},
    };
}

struct TelemetryConfig {
    Index n_days = 480;
    Index samples_per_day = 256;
    double noise_sd = 0.05;
    Index year_length = 240;
    double bump_amplitude = 1.0;
    double seasonal_modulation = 0.2;  ///< relative amplitude swing over the year
    double baseline_drift = 0.2;       ///< absolute baseline swing over the year
    double local_width = 1.0 / 16.0;   ///< fraction of the day touched by local anomalies
    std::vector<AnomalySpec> anomaly_specs = default_anomalies();
    std::uint64_t seed = 1;
};

struct Telemetry {
    CurveSet curves;
    std::vector<Index> ground_truth;  ///< anomalous days, 0-based, ascending
};

namespace detail {

/// 0 -> 1 raised-cosine ramp on [a, b].
inline double ramp(double t, double a, double b) {
    if (t <= a) return 0.0;
    if (t >= b) return 1.0;
    return 0.5 * (1.0 - std::cos(std::numbers::pi * (t - a) / (b - a)));
}

/// Plateau bump: rises on [a, b], flat on [b, c], falls on [c, d].
inline double bump(double t, double a, double b, double c, double d) { return ramp(t, a, b) * (1.0 - ramp(t, c, d)); }

} // namespace detail

/// Nominal daily shape.
inline double daily_pattern(double t) { return detail::bump(t, 0.25, 0.375, 0.625, 0.75); }

/// Alternate shape used by PatternChange: earlier, sharper rise and a slow
/// tail.
inline double alternate_pattern(double t) { return detail::bump(t, 0.22, 0.3, 0.5, 0.8); }

inline void validate(const TelemetryConfig& cfg) {
    if (cfg.n_days < 2) throw InvalidArgument("n_days must be at least 2");
    if (cfg.samples_per_day < 2 || (cfg.samples_per_day & (cfg.samples_per_day - 1)) != 0)
        throw InvalidArgument("samples_per_day must be a power of two >= 2");
    if (cfg.year_length < 1) throw InvalidArgument("year_length must be positive");
    if (!(cfg.noise_sd >= 0.0)) throw InvalidArgument("noise_sd must be nonnegative");
    for (const auto& a : cfg.anomaly_specs) {
        if (a.day >= cfg.n_days)
            throw InvalidArgument("anomaly day " + std::to_string(a.day) + " out of range [0, " + std::to_string(cfg.n_days) + ")");
        if (!(a.start >= 0.0 && a.start < 1.0)) throw InvalidArgument("anomaly start must lie in [0, 1)");
    }
}

inline Telemetry generate_telemetry(const TelemetryConfig& cfg) {
    validate(cfg);
    const Index n = cfg.n_days;
    const Index p = cfg.samples_per_day;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    std::vector<const AnomalySpec*> by_day(n, nullptr);
    for (const auto& a : cfg.anomaly_specs) by_day[a.day] = &a;

    std::normal_distribution<double> normal;
    for (Index i = 0; i < n; ++i) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(i % cfg.year_length) / static_cast<double>(cfg.year_length);
        const double amp = cfg.bump_amplitude * (1.0 + cfg.seasonal_modulation * std::sin(phase));
        const double base = cfg.baseline_drift * std::cos(phase);
        const AnomalySpec* an = by_day[i];
        const double lo = an ? an->start : 0.0;
        const double hi = an ? an->start + cfg.local_width : 0.0;
        auto rng = make_rng(cfg.seed, {i});
        normal.reset();

        for (Index j = 0; j < p; ++j) {
            const double t = static_cast<double>(j) / static_cast<double>(p);
            double shape = daily_pattern(t);
            double sd = cfg.noise_sd;
            double value = 0.0;
            bool hold = false;
            if (an) {
                const bool local = t >= lo && t < hi;
                switch (an->kind) {
                case AnomalyKind::PatternChange:
                    shape = (1.0 - an->magnitude) * shape + an->magnitude * alternate_pattern(t);
                    break;
                case AnomalyKind::AmplitudeChange: shape *= an->magnitude; break;
                case AnomalyKind::LocalNoise:
                    if (local) sd *= an->magnitude;
                    break;
                case AnomalyKind::LocalSpike:
                    // Triangular spike on the first quarter of the window.
                    if (local) {
                        const double w = cfg.local_width / 4.0;
                        const double u = (t - lo) / w;
                        if (u < 1.0) value += an->magnitude * (1.0 - std::abs(2.0 * u - 1.0));
                    }
                    break;
                case AnomalyKind::DefaultValue: hold = local; break;
                case AnomalyKind::DoublePeriod:
                    shape = an->magnitude * daily_pattern(t < 0.5 ? 2.0 * t : 2.0 * t - 1.0);
                    break;
                }
            }
            const double noise = normal(rng);  // always drawn so days stay aligned across configs
            if (hold) {
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = an->magnitude;
            } else {
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = base + amp * shape + value + sd * noise;
            }
        }
    }

    std::vector<Index> truth;
    for (Index i = 0; i < n; ++i)
        if (by_day[i]) truth.push_back(i);
    return Telemetry{CurveSet(std::move(x)), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Two-sample test studies

enum class Distribution { Gaussian, Exponential };

inline const char* to_string(Distribution d) { return d == Distribution::Gaussian ? "gaussian" : "exponential"; }

inline Distribution parse_distribution(std::string_view s) {
    if (s == "gaussian") return Distribution::Gaussian;
    if (s == "exponential") return Distribution::Exponential;
    throw InvalidArgument("unknown distribution '" + std::string(s) + "' (expected gaussian or exponential)");
}

/// Null samples are N(0, 1) or Exp(rate); the alternative (power study) is
/// N(mu, sigma2).
struct StudyConfig {
    Index group_size = 1000;
    Index replications = 5000;
    double alpha = 0.05;
    Distribution distribution = Distribution::Gaussian;
    double rate = 1.0;
    double mu = 0.1;
    double sigma2 = 1.15;
    std::uint64_t seed = 1;
};

inline void validate(const StudyConfig& cfg) {
    if (cfg.replications < 100) throw InvalidArgument("a study needs at least 100 replications");
    if (cfg.group_size < 2) throw InvalidArgument("group_size must be at least 2");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (!(cfg.sigma2 > 0.0)) throw InvalidArgument("sigma2 must be positive");
    if (!(cfg.rate > 0.0)) throw InvalidArgument("rate must be positive");
}

namespace detail {

enum : std::uint64_t { kGroupX = 0, kGroupY = 1, kGroupZ = 2 };

inline Sample draw_null(const StudyConfig& cfg, std::uint64_t rep, std::uint64_t group) {
    auto rng = make_rng(cfg.seed, {rep, group});
    std::vector<double> v(cfg.group_size);
    if (cfg.distribution == Distribution::Gaussian) {
        std::normal_distribution<double> d;
        for (auto& e : v) e = d(rng);
    } else {
        std::exponential_distribution<double> d(cfg.rate);
        for (auto& e : v) e = d(rng);
    }
    return Sample(std::move(v));
}

inline Sample draw_alternative(const StudyConfig& cfg, std::uint64_t rep) {
    auto rng = make_rng(cfg.seed, {rep, kGroupZ});
    std::normal_distribution<double> d(cfg.mu, std::sqrt(cfg.sigma2));
    std::vector<double> v(cfg.group_size);
    for (auto& e : v) e = d(rng);
    return Sample(std::move(v));
}

} // namespace detail

struct LevelEstimate {
    double alpha_hat = 0.0;
    double standard_error = 0.0;
    Index replications = 0;
};

/// Fraction of replications where two independent same-distribution groups
/// of size group_size are rejected (p < alpha).
inline LevelEstimate level_study(const StudyConfig& cfg, TestKind kind, const BridgeTables& tables) {
    validate(cfg);
    Index rejected = 0;
    for (Index rep = 0; rep < cfg.replications; ++rep) {
        const auto x = detail::draw_null(cfg, rep, detail::kGroupX);
        const auto y = detail::draw_null(cfg, rep, detail::kGroupY);
        if (two_sample_test(kind, x, y, tables).p_value < cfg.alpha) ++rejected;
    }
    LevelEstimate e;
    e.replications = cfg.replications;
    e.alpha_hat = static_cast<double>(rejected) / static_cast<double>(cfg.replications);
    e.standard_error = std::sqrt(e.alpha_hat * (1.0 - e.alpha_hat) / static_cast<double>(cfg.replications));
    return e;
}

struct RocPoint {
    double alpha = 0.0;
    double fpr = 0.0;  ///< fraction of null pairs rejected at alpha
    double tpr = 0.0;  ///< fraction of alternative pairs rejected at alpha
};

struct RocCurve {
    TestKind kind = TestKind::W2;
    std::vector<RocPoint> points;
    double auc = 0.0;
    std::vector<double> null_p_values;
    std::vector<double> alt_p_values;
};

inline constexpr std::size_t kRocGridSize = 200;

/// Area under the empirical ROC curve traced over every alpha:
/// P(p_alt < p_null) + P(p_alt = p_null) / 2.
inline double roc_auc(std::vector<double> null_p, std::vector<double> alt_p) {
    if (null_p.empty() || alt_p.empty()) throw InvalidArgument("AUC needs both p-value sets");
    std::sort(null_p.begin(), null_p.end());
    double wins = 0.0;
    for (double a : alt_p) {
        const auto lo = std::lower_bound(null_p.begin(), null_p.end(), a);
        const auto hi = std::upper_bound(lo, null_p.end(), a);
        wins += static_cast<double>(null_p.end() - hi) + 0.5 * static_cast<double>(hi - lo);
    }
    return wins / (static_cast<double>(null_p.size()) * static_cast<double>(alt_p.size()));
}

/// Per replication draws X, Y from the null and Z from N(mu, sigma2), tests
/// {F_X = F_Y} and {F_X = F_Z} with every requested test on the same draws,
/// and tabulates rejection fractions (p < alpha) over alpha = 0, 1/199, ..., 1.
inline std::vector<RocCurve> power_study(const StudyConfig& cfg, const std::vector<TestKind>& kinds, const BridgeTables& tables) {
    validate(cfg);
    std::vector<RocCurve> curves(kinds.size());
    for (std::size_t t = 0; t < kinds.size(); ++t) {
        curves[t].kind = kinds[t];
        curves[t].null_p_values.reserve(cfg.replications);
        curves[t].alt_p_values.reserve(cfg.replications);
    }
    for (Index rep = 0; rep < cfg.replications; ++rep) {
        const auto x = detail::draw_null(cfg, rep, detail::kGroupX);
        const auto y = detail::draw_null(cfg, rep, detail::kGroupY);
        const auto z = detail::draw_alternative(cfg, rep);
        for (std::size_t t = 0; t < kinds.size(); ++t) {
            curves[t].null_p_values.push_back(two_sample_test(kinds[t], x, y, tables).p_value);
            curves[t].alt_p_values.push_back(two_sample_test(kinds[t], x, z, tables).p_value);
        }
    }
    const double m = static_cast<double>(cfg.replications);
    for (auto& c : curves) {
        for (std::size_t g = 0; g < kRocGridSize; ++g) {
            const double a = static_cast<double>(g) / static_cast<double>(kRocGridSize - 1);
            RocPoint pt;
            pt.alpha = a;
            pt.fpr = static_cast<double>(std::count_if(c.null_p_values.begin(), c.null_p_values.end(), [a](double v) { return v < a; })) / m;
            pt.tpr = static_cast<double>(std::count_if(c.alt_p_values.begin(), c.alt_p_values.end(), [a](double v) { return v < a; })) / m;
            c.points.push_back(pt);
        }
        c.auc = roc_auc(c.null_p_values, c.alt_p_values);
    }
    return curves;
}

/// Multiple-testing outcome of one replication: V false rejections among R
/// rejections, U true nulls kept (all hypotheses are null here, so S = T = 0).
struct FdrReplication {
    Index u = 0;
    Index v = 0;
    Index r = 0;
};

struct FdrStudyResult {
    double fdr = 0.0;             ///< mean of V / max(R, 1)
    double standard_error = 0.0;
    double any_rejection_rate = 0.0;
    std::vector<FdrReplication> replications;
};

/// Full-null study: m independent U(0, 1) p-values per replication, BH at
/// level alpha.
inline FdrStudyResult fdr_null_study(Index m_hypotheses, Index replications, double alpha, std::uint64_t seed) {
    if (m_hypotheses < 1 || replications < 1) throw InvalidArgument("counts must be positive");
    FdrStudyResult out;
    out.replications.reserve(replications);
    double sum = 0.0, sum_sq = 0.0;
    Index any = 0;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> p(m_hypotheses);
    for (Index rep = 0; rep < replications; ++rep) {
        auto rng = make_rng(seed, {rep});
        for (auto& v : p) v = unif(rng);
        const auto sel = benjamini_hochberg(p, alpha);
        FdrReplication row;
        row.r = sel.k_star;
        row.v = sel.k_star;
        row.u = m_hypotheses - sel.k_star;
        out.replications.push_back(row);
        const double q = static_cast<double>(row.v) / static_cast<double>(std::max<Index>(row.r, 1));
        sum += q;
        sum_sq += q * q;
        if (row.r > 0) ++any;
    }
    const double n = static_cast<double>(replications);
    out.fdr = sum / n;
    const double var = std::max(0.0, sum_sq / n - out.fdr * out.fdr);
    out.standard_error = std::sqrt(var / n);
    out.any_rejection_rate = static_cast<double>(any) / n;
    return out;
}

/// Probability that at least one of `m_tests` independent null two-sample
/// tests (groups of cfg.group_size) rejects at cfg.alpha without correction.
inline LevelEstimate any_rejection_study(const StudyConfig& cfg, Index m_tests, TestKind kind, const BridgeTables& tables) {
    validate(cfg);
    Index hits = 0;
    for (Index rep = 0; rep < cfg.replications; ++rep) {
        bool any = false;
        for (Index t = 0; t < m_tests && !any; ++t) {
            const auto x = detail::draw_null(cfg, rep * m_tests + t, detail::kGroupX);
            const auto y = detail::draw_null(cfg, rep * m_tests + t, detail::kGroupY);
            any = two_sample_test(kind, x, y, tables).p_value < cfg.alpha;
        }
        if (any) ++hits;
    }
    LevelEstimate e;
    e.replications = cfg.replications;
    e.alpha_hat = static_cast<double>(hits) / static_cast<double>(cfg.replications);
    e.standard_error = std::sqrt(e.alpha_hat * (1.0 - e.alpha_hat) / static_cast<double>(cfg.replications));
    return e;
}

} // namespace fdo
