#pragma once

// One-dimensional two-sample tests.
//
// With F_{n0} the ECDF of x and G_{n1} the ECDF of y, and
// gamma = n0 n1 / (n0 + n1):
//   KS   D  = sqrt(gamma) sup_s |F_{n0}(s) - G_{n1}(s)|
//   W2   T2 = gamma   int_0^1 (G_{n1}(F_{n0}^{-1}(t)) - t)^2 dt
//   Winf Ti = sqrt(gamma) sup_t |G_{n1}(F_{n0}^{-1}(t)) - t|
// Under H0 these converge to sup|B|, int B^2 and sup|B| for a Brownian bridge
// B. p-values use the Kolmogorov series for sup|B| and a seeded Monte Carlo
// quantile table for int B^2.

#include "fdo/curves.hpp"
#include "fdo/error.hpp"
#include "fdo/random.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace fdo {

class Sample {
public:
    explicit Sample(std::vector<double> values) : values_(std::move(values)), sorted_(values_) {
        for (double v : values_)
            if (!std::isfinite(v)) throw InvalidArgument("sample values must be finite");
        std::sort(sorted_.begin(), sorted_.end());
    }

    Index size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    const std::vector<double>& values() const noexcept { return values_; }
    /// Order statistics X_(1) <= ... <= X_(n).
    const std::vector<double>& sorted_view() const noexcept { return sorted_; }

private:
    std::vector<double> values_;
    std::vector<double> sorted_;
};

enum class TestKind { KS, W2, Winf };

inline const char* to_string(TestKind k) {
    switch (k) {
    case TestKind::KS: return "ks";
    case TestKind::W2: return "w2";
    case TestKind::Winf: return "winf";
    }
    return "?";
}

inline TestKind parse_test_kind(std::string_view s) {
    if (s == "ks") return TestKind::KS;
    if (s == "w2") return TestKind::W2;
    if (s == "winf") return TestKind::Winf;
    throw InvalidArgument("unknown test kind '" + std::string(s) + "' (expected ks, w2 or winf)");
}

struct TwoSampleResult {
    TestKind statistic_kind = TestKind::W2;
    double statistic = 0.0;
    double p_value = 1.0;
    double gamma = 0.0;
};

/// Right-continuous empirical CDF: (1/n) #{i : x_i <= t}.
inline double ecdf(const Sample& sample, double t) {
    if (sample.empty()) return 0.0;
    const auto& s = sample.sorted_view();
    const auto count = std::upper_bound(s.begin(), s.end(), t) - s.begin();
    return static_cast<double>(count) / static_cast<double>(s.size());
}

/// F_n^{-1}(prob): X_(i) for prob in [(i-1)/n, i/n), X_(n) at prob = 1.
inline double empirical_quantile(std::span<const double> sorted, double prob) {
    if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile probability must lie in [0, 1]");
    if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
    const auto n = sorted.size();
    auto i = static_cast<std::size_t>(std::floor(prob * static_cast<double>(n)));  // 0-based order statistic
    return sorted[std::min(i, n - 1)];
}

inline double empirical_quantile(const Sample& sample, double prob) {
    return empirical_quantile(std::span<const double>(sample.sorted_view()), prob);
}

// ---------------------------------------------------------------------------
// Limit laws

/// P(sup_t |B(t)| <= x), the Kolmogorov distribution.
inline double sup_bridge_cdf(double x) {
    if (x <= 0.02) return 0.0;
    constexpr double tol = 1e-12;
    double value = 0.0;
    if (x < 1.0) {
        // Jacobi theta form, same function but converges fast for small x:
        // sqrt(2 pi)/x sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2)).
        const double c = -std::numbers::pi * std::numbers::pi / (8.0 * x * x);
        double sum = 0.0;
        for (int k = 1; k < 1000; ++k) {
            const double term = std::exp(c * (2.0 * k - 1) * (2.0 * k - 1));
            sum += term;
            if (term < tol) break;
        }
        value = std::sqrt(2.0 * std::numbers::pi) / x * sum;
    } else {
        double sum = 0.0;
        for (int k = 1; k < 1000; ++k) {
            const double term = std::exp(-2.0 * k * k * x * x);
            sum += (k % 2 ? term : -term);
            if (term < tol) break;
        }
        value = 1.0 - 2.0 * sum;
    }
    return std::clamp(value, 0.0, 1.0);
}

/// Monte Carlo quantile table of int_0^1 B(t)^2 dt, sampled through its
/// Karhunen-Loeve series sum_{k=1}^{truncation} Z_k^2 / (k pi)^2.
class BridgeTables {
public:
    static constexpr std::size_t kGridSize = 10001;  // probabilities 0, 1e-4, ..., 1
    static constexpr std::uint64_t kDefaultDraws = 1'000'000;
    static constexpr std::uint64_t kDefaultTruncation = 10'000;
    static constexpr std::uint64_t kDefaultSeed = 20190213;

    BridgeTables(std::vector<double> quantiles, std::uint64_t num_draws, std::uint64_t truncation, std::uint64_t seed,
                 double draw_mean, double draw_sd)
        : quantiles_(std::move(quantiles)),
          num_draws_(num_draws),
          truncation_(truncation),
          seed_(seed),
          mean_(draw_mean),
          sd_(draw_sd) {
        if (quantiles_.size() != kGridSize) throw FormatError("bridge table must hold " + std::to_string(kGridSize) + " quantiles");
    }

    /// Quantile of int B^2 at probability j * 1e-4.
    const std::vector<double>& l2_quantiles() const noexcept { return quantiles_; }

    /// Linear interpolation of the tabulated quantile function.
    double l2_quantile(double prob) const {
        if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("probability must lie in [0, 1]");
        const double pos = prob * static_cast<double>(kGridSize - 1);
        const auto j = std::min(static_cast<std::size_t>(pos), kGridSize - 2);
        const double w = pos - static_cast<double>(j);
        return quantiles_[j] + w * (quantiles_[j + 1] - quantiles_[j]);
    }

    /// P(int B^2 <= x) by inverting the interpolated quantile table.
    double l2_cdf(double x) const {
        if (x < quantiles_.front()) return 0.0;
        if (x >= quantiles_.back()) return 1.0;
        const auto it = std::upper_bound(quantiles_.begin(), quantiles_.end(), x);
        const auto j = static_cast<std::size_t>(it - quantiles_.begin()) - 1;
        const double lo = quantiles_[j];
        const double hi = quantiles_[j + 1];
        const double w = hi > lo ? (x - lo) / (hi - lo) : 0.0;
        return (static_cast<double>(j) + w) / static_cast<double>(kGridSize - 1);
    }

    double sup_cdf(double x) const { return sup_bridge_cdf(x); }

    std::uint64_t num_draws() const noexcept { return num_draws_; }
    std::uint64_t truncation() const noexcept { return truncation_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double draw_mean() const noexcept { return mean_; }
    double draw_sd() const noexcept { return sd_; }

private:
    std::vector<double> quantiles_;
    std::uint64_t num_draws_;
    std::uint64_t truncation_;
    std::uint64_t seed_;
    double mean_;
    double sd_;
};

namespace detail {
inline constexpr std::uint64_t kBridgeChunk = 4096;
}

/// Draws num_draws values of the truncated Karhunen-Loeve series. Draw d uses
/// the stream derive_seed(seed, {chunk}) with chunk = d / 4096, so the result
/// does not depend on how chunks are scheduled.
inline std::vector<double> sample_l2_bridge(std::uint64_t num_draws, std::uint64_t truncation, std::uint64_t seed) {
    std::vector<double> weights(truncation);
    for (std::uint64_t k = 1; k <= truncation; ++k) {
        const double kp = static_cast<double>(k) * std::numbers::pi;
        weights[k - 1] = 1.0 / (kp * kp);
    }
    std::vector<double> draws(num_draws);
    boost::random::normal_distribution<double> normal;  // ziggurat
    for (std::uint64_t chunk = 0; chunk * detail::kBridgeChunk < num_draws; ++chunk) {
        auto rng = make_rng(seed, {chunk});
        normal.reset();
        const std::uint64_t end = std::min(num_draws, (chunk + 1) * detail::kBridgeChunk);
        for (std::uint64_t d = chunk * detail::kBridgeChunk; d < end; ++d) {
            double s = 0.0;
            for (double w : weights) {
                const double z = normal(rng);
                s += w * z * z;
            }
            draws[d] = s;
        }
    }
    return draws;
}

inline BridgeTables build_l2_bridge_table(std::uint64_t num_draws, std::uint64_t truncation, std::uint64_t seed) {
    if (num_draws < 100'000) throw InsufficientDataError("bridge table needs at least 1e5 draws");
    if (truncation < 1'000) throw InsufficientDataError("bridge table needs a series truncation of at least 1e3");
    auto draws = sample_l2_bridge(num_draws, truncation, seed);

    double mean = 0.0;
    for (double v : draws) mean += v;
    mean /= static_cast<double>(num_draws);
    double ss = 0.0;
    for (double v : draws) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(num_draws - 1));

    std::sort(draws.begin(), draws.end());
    std::vector<double> q(BridgeTables::kGridSize);
    for (std::size_t j = 0; j < q.size(); ++j)
        q[j] = empirical_quantile(std::span<const double>(draws), static_cast<double>(j) / static_cast<double>(q.size() - 1));
    return BridgeTables(std::move(q), num_draws, truncation, seed, mean, sd);
}

// ---------------------------------------------------------------------------
// Table cache. Files are keyed by (num_draws, truncation, seed).

inline std::filesystem::path default_bridge_cache_dir() {
    if (const char* dir = std::getenv("FDO_CACHE_DIR"); dir && *dir) return dir;
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return std::filesystem::path(xdg) / "fdoutlier";
    if (const char* home = std::getenv("HOME"); home && *home) return std::filesystem::path(home) / ".cache" / "fdoutlier";
    return {};
}

inline std::filesystem::path bridge_cache_file(const std::filesystem::path& dir, std::uint64_t num_draws,
                                               std::uint64_t truncation, std::uint64_t seed) {
    return dir / ("l2bridge_" + std::to_string(num_draws) + "_" + std::to_string(truncation) + "_" +
                  std::to_string(seed) + ".csv");
}

inline void save_bridge_table(const BridgeTables& t, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write bridge table '" + file.string() + "'");
    out << "# l2 bridge quantile table\n";
    out << "num_draws," << t.num_draws() << "\ntruncation," << t.truncation() << "\nseed," << t.seed() << '\n';
    out << "mean," << detail::format_double(t.draw_mean()) << "\nsd," << detail::format_double(t.draw_sd()) << '\n';
    for (double q : t.l2_quantiles()) out << detail::format_double(q) << '\n';
}

inline BridgeTables load_bridge_table(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open bridge table '" + file.string() + "'");
    std::string line;
    std::getline(in, line);
    auto field = [&](const char* key) {
        if (!std::getline(in, line) || line.rfind(std::string(key) + ",", 0) != 0)
            throw FormatError("bridge table '" + file.string() + "' lacks field " + key);
        return line.substr(std::strlen(key) + 1);
    };
    const auto draws = std::stoull(field("num_draws"));
    const auto trunc = std::stoull(field("truncation"));
    const auto seed = std::stoull(field("seed"));
    const double mean = std::stod(field("mean"));
    const double sd = std::stod(field("sd"));
    std::vector<double> q;
    q.reserve(BridgeTables::kGridSize);
    while (std::getline(in, line))
        if (!line.empty()) q.push_back(detail::parse_cell(line, q.size() + 7, 1));
    return BridgeTables(std::move(q), draws, trunc, seed, mean, sd);
}

/// Loads the table from `cache_dir` if present, otherwise builds and stores
/// it. An empty cache_dir disables caching.
inline BridgeTables load_or_build_l2_bridge_table(std::uint64_t num_draws, std::uint64_t truncation, std::uint64_t seed,
                                                  const std::filesystem::path& cache_dir) {
    if (!cache_dir.empty()) {
        const auto file = bridge_cache_file(cache_dir, num_draws, truncation, seed);
        std::error_code ec;
        if (std::filesystem::exists(file, ec)) {
            try {
                auto t = load_bridge_table(file);
                if (t.num_draws() == num_draws && t.truncation() == truncation && t.seed() == seed) return t;
            } catch (const std::exception&) {
                // corrupt cache entry, rebuild below
            }
        }
        auto t = build_l2_bridge_table(num_draws, truncation, seed);
        std::filesystem::create_directories(cache_dir, ec);
        const auto tmp = file.string() + ".tmp";
        try {
            save_bridge_table(t, tmp);
            std::filesystem::rename(tmp, file, ec);
        } catch (const Error&) {
            // read-only cache location; the in-memory table is still valid
        }
        return t;
    }
    return build_l2_bridge_table(num_draws, truncation, seed);
}

/// Process-wide default table (1e6 draws, truncation 1e4, fixed seed), built
/// once and cached in default_bridge_cache_dir().
inline const BridgeTables& default_bridge_tables() {
    static const BridgeTables tables = load_or_build_l2_bridge_table(
        BridgeTables::kDefaultDraws, BridgeTables::kDefaultTruncation, BridgeTables::kDefaultSeed, default_bridge_cache_dir());
    return tables;
}

// ---------------------------------------------------------------------------
// Statistics

namespace detail {

inline double gamma_of(std::size_t n0, std::size_t n1) {
    const double a = static_cast<double>(n0);
    const double b = static_cast<double>(n1);
    return a * b / (a + b);
}

inline void require_nonempty(const Sample& x, const Sample& y) {
    if (x.empty() || y.empty()) throw InvalidArgument("two-sample tests need non-empty samples");
}

/// c_i = G_{n1}(X_(i)) for every order statistic of x; the composed process
/// G_{n1}(F_{n0}^{-1}(t)) equals c_i on [(i-1)/n0, i/n0).
inline std::vector<double> composed_levels(const Sample& x, const Sample& y) {
    const auto& xs = x.sorted_view();
    const auto& ys = y.sorted_view();
    std::vector<double> c(xs.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        while (j < ys.size() && ys[j] <= xs[i]) ++j;
        c[i] = static_cast<double>(j) / static_cast<double>(ys.size());
    }
    return c;
}

inline double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace detail

inline TwoSampleResult ks_statistic(const Sample& x, const Sample& y) {
    detail::require_nonempty(x, y);
    const auto& xs = x.sorted_view();
    const auto& ys = y.sorted_view();
    const double n0 = static_cast<double>(xs.size());
    const double n1 = static_cast<double>(ys.size());
    std::size_t i = 0, j = 0;
    double sup = 0.0;
    // Merge scan; after consuming every copy of the current value both ECDFs
    // are evaluated at it.
    while (i < xs.size() || j < ys.size()) {
        const double v = (j >= ys.size() || (i < xs.size() && xs[i] <= ys[j])) ? xs[i] : ys[j];
        while (i < xs.size() && xs[i] == v) ++i;
        while (j < ys.size() && ys[j] == v) ++j;
        sup = std::max(sup, std::abs(static_cast<double>(i) / n0 - static_cast<double>(j) / n1));
    }
    TwoSampleResult r;
    r.statistic_kind = TestKind::KS;
    r.gamma = detail::gamma_of(xs.size(), ys.size());
    r.statistic = std::sqrt(r.gamma) * sup;
    r.p_value = detail::clamp_unit(1.0 - sup_bridge_cdf(r.statistic));
    return r;
}

/// Closed form per interval: int_a^b (c - t)^2 dt = ((c - a)^3 - (c - b)^3) / 3.
inline double w2_raw_integral(const Sample& x, const Sample& y) {
    const auto c = detail::composed_levels(x, y);
    const double n0 = static_cast<double>(c.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double a = static_cast<double>(i) / n0;
        const double b = static_cast<double>(i + 1) / n0;
        const double da = c[i] - a;
        const double db = c[i] - b;
        sum += (da * da * da - db * db * db) / 3.0;
    }
    return sum;
}

inline TwoSampleResult w2_statistic(const Sample& x, const Sample& y, const BridgeTables& tables) {
    detail::require_nonempty(x, y);
    TwoSampleResult r;
    r.statistic_kind = TestKind::W2;
    r.gamma = detail::gamma_of(x.size(), y.size());
    r.statistic = r.gamma * w2_raw_integral(x, y);
    r.p_value = detail::clamp_unit(1.0 - tables.l2_cdf(r.statistic));
    return r;
}

/// sup over each closed interval [(i-1)/n0, i/n0] of |c_i - t| sits at an
/// endpoint; the right endpoint enters as a limit, including t = 1.
inline double winf_raw_sup(const Sample& x, const Sample& y) {
    const auto c = detail::composed_levels(x, y);
    const double n0 = static_cast<double>(c.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double a = static_cast<double>(i) / n0;
        const double b = static_cast<double>(i + 1) / n0;
        sup = std::max({sup, std::abs(c[i] - a), std::abs(c[i] - b)});
    }
    return sup;
}

inline TwoSampleResult winf_statistic(const Sample& x, const Sample& y) {
    detail::require_nonempty(x, y);
    TwoSampleResult r;
    r.statistic_kind = TestKind::Winf;
    r.gamma = detail::gamma_of(x.size(), y.size());
    r.statistic = std::sqrt(r.gamma) * winf_raw_sup(x, y);
    r.p_value = detail::clamp_unit(1.0 - sup_bridge_cdf(r.statistic));
    return r;
}

/// Dispatch on the test kind; `x` plays the role of the reference (nominal)
/// sample F, `y` of the compared sample G.
inline TwoSampleResult two_sample_test(TestKind kind, const Sample& x, const Sample& y, const BridgeTables& tables) {
    switch (kind) {
    case TestKind::KS: return ks_statistic(x, y);
    case TestKind::W2: return w2_statistic(x, y, tables);
    case TestKind::Winf: return winf_statistic(x, y);
    }
    throw InvalidArgument("unknown test kind");
}

} // namespace fdo
