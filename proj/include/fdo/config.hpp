#pragma once

// Flat key = value configuration files.
//
//   # comment
//   noise_sd = 0.05
//   seed = 7
//
// Keys are case-sensitive, whitespace around keys and values is ignored and a
// key may appear once.

#include "fdo/curves.hpp"
#include "fdo/error.hpp"
#include "fdo/pipeline.hpp"
#include "fdo/simgen.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace fdo {

class ConfigError : public Error {
public:
    using Error::Error;
};

class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::istream& in, const std::string& origin = "config") {
        KeyValueConfig cfg;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const auto body = detail::trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
            const std::string key(detail::trim(body.substr(0, eq)));
            const std::string value(detail::trim(body.substr(eq + 1)));
            if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
            if (!cfg.values_.emplace(key, value).second)
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        return parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    std::optional<std::string> get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    template <class T>
    std::optional<T> get_as(const std::string& key) const {
        const auto s = get(key);
        if (!s) return std::nullopt;
        return convert<T>(key, *s);
    }

    /// Keys never read through get(); callers treat them as typos.
    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

private:
    template <class T>
    static T convert(const std::string& key, const std::string& s) {
        if constexpr (std::is_same_v<T, std::string>) {
            return s;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
            if (s == "false" || s == "0" || s == "no" || s == "off") return false;
            throw ConfigError("config key '" + key + "': expected a boolean, got '" + s + "'");
        } else {
            T v{};
            const char* first = s.data();
            const char* last = s.data() + s.size();
            if (first != last && *first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last || first == last)
                throw ConfigError("config key '" + key + "': cannot parse '" + s + "'");
            return v;
        }
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

/// "default", "none" or a ';'-separated list of day:kind:magnitude[:start]
/// with 0-based days, e.g. "5:amplitude_change:1.25;133:local_noise:6:0.3125".
inline std::vector<AnomalySpec> parse_anomaly_list(std::string_view text) {
    text = detail::trim(text);
    if (text == "default") return default_anomalies();
    if (text == "none" || text.empty()) return {};
    std::vector<AnomalySpec> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find(';', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto item = detail::trim(text.substr(pos, end - pos));
        pos = end + 1;
        if (item.empty()) continue;
        std::vector<std::string_view> parts;
        std::size_t q = 0;
        while (q <= item.size()) {
            auto e = item.find(':', q);
            if (e == std::string_view::npos) e = item.size();
            parts.push_back(detail::trim(item.substr(q, e - q)));
            q = e + 1;
        }
        if (parts.size() < 3 || parts.size() > 4)
            throw ConfigError("anomaly '" + std::string(item) + "': expected day:kind:magnitude[:start]");
        AnomalySpec a;
        const auto day = parse_index_list(parts[0]);
        if (day.size() != 1) throw ConfigError("anomaly '" + std::string(item) + "': bad day");
        a.day = day[0];
        try {
            a.kind = parse_anomaly_kind(parts[1]);
            a.magnitude = detail::parse_cell(parts[2], 1, 3);
            if (parts.size() == 4) a.start = detail::parse_cell(parts[3], 1, 4);
        } catch (const Error& e) {
            throw ConfigError("anomaly '" + std::string(item) + "': " + e.what());
        }
        out.push_back(a);
    }
    return out;
}

/// Copies recognised TelemetryConfig keys from the file.
inline void apply(const KeyValueConfig& kv, TelemetryConfig& cfg) {
    if (auto v = kv.get_as<Index>("n_days")) cfg.n_days = *v;
    if (auto v = kv.get_as<Index>("samples_per_day")) cfg.samples_per_day = *v;
    if (auto v = kv.get_as<double>("noise_sd")) cfg.noise_sd = *v;
    if (auto v = kv.get_as<Index>("year_length")) cfg.year_length = *v;
    if (auto v = kv.get_as<double>("bump_amplitude")) cfg.bump_amplitude = *v;
    if (auto v = kv.get_as<double>("seasonal_modulation")) cfg.seasonal_modulation = *v;
    if (auto v = kv.get_as<double>("baseline_drift")) cfg.baseline_drift = *v;
    if (auto v = kv.get_as<double>("local_width")) cfg.local_width = *v;
    if (auto v = kv.get("anomalies")) cfg.anomaly_specs = parse_anomaly_list(*v);
    if (auto v = kv.get_as<std::uint64_t>("seed")) cfg.seed = *v;
}

/// Copies recognised StudyConfig keys from the file.
inline void apply(const KeyValueConfig& kv, StudyConfig& cfg) {
    if (auto v = kv.get_as<Index>("group_size")) cfg.group_size = *v;
    if (auto v = kv.get_as<Index>("replications")) cfg.replications = *v;
    if (auto v = kv.get_as<double>("alpha")) cfg.alpha = *v;
    if (auto v = kv.get("distribution")) {
        try {
            cfg.distribution = parse_distribution(*v);
        } catch (const Error& e) {
            throw ConfigError(std::string("config key 'distribution': ") + e.what());
        }
    }
    if (auto v = kv.get_as<double>("rate")) cfg.rate = *v;
    if (auto v = kv.get_as<double>("mu")) cfg.mu = *v;
    if (auto v = kv.get_as<double>("sigma2")) cfg.sigma2 = *v;
    if (auto v = kv.get_as<std::uint64_t>("seed")) cfg.seed = *v;
}

namespace detail {
inline std::vector<double> parse_double_list(std::string_view text) {
    std::vector<double> out;
    std::size_t col = 1;
    for (auto cell : split_commas(text)) out.push_back(parse_cell(cell, 1, col++));
    return out;
}
} // namespace detail

/// Copies recognised PipelineOptions keys from the file.
inline void apply(const KeyValueConfig& kv, PipelineOptions& opt) {
    try {
        if (auto v = kv.get("sets")) {
            opt.sets.clear();
            for (Index id : parse_index_list(*v)) opt.sets.push_back(static_cast<int>(id));
        }
        if (auto v = kv.get("thresholds")) opt.thresholds = detail::parse_double_list(*v);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (auto v = kv.get_as<Index>("lof_k")) opt.lof_k = *v;
    if (auto v = kv.get_as<double>("alpha")) opt.alpha = *v;
    if (auto v = kv.get_as<bool>("fdr_control")) opt.fdr_control = *v;
    if (auto v = kv.get_as<bool>("include_nominal_neighbors")) opt.include_nominal_neighbors = *v;
    if (auto v = kv.get_as<bool>("standardize")) opt.standardize = *v;
    if (auto v = kv.get_as<bool>("pca_center")) opt.pca_center = *v;
    if (auto v = kv.get_as<double>("variance_fraction")) opt.variance_fraction = *v;
}

} // namespace fdo
