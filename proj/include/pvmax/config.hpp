// Experiment configuration: key=value text, canonical serialization and validation.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "finite_field.hpp"
#include "trace_families.hpp"

namespace pvmax {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> diagnostics)
        : std::runtime_error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}
    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    static std::string join(const std::vector<std::string>& d) {
        std::string s;
        for (const auto& x : d) s += (s.empty() ? "" : "; ") + x;
        return s;
    }
    std::vector<std::string> diagnostics_;
};

struct ExperimentConfig {
    std::string command = "scan";
    // family
    std::string family = "kloosterman";
    std::uint64_t p = 101;
    std::vector<std::int64_t> g = {0, 0, 0, 1};
    int d = 1;
    int r = 1;
    // sampling
    std::uint64_t seed = 0;
    bool exhaustive = true;
    std::uint64_t samples = 10000;
    // tail grid
    double v_min = 0;
    double v_max = 3;
    double v_step = 0.1;
    // gmax
    int h_max = 9;
    bool oracle = false;
    int alpha_grid = 4096;
    int theta_grid = 4096;
    // random model
    std::string statistic = "max";
    int truncation = 512;
    std::uint64_t grid = 0;
    // constants
    double tol = 1e-6;
    std::vector<double> s = {};
    // audits
    std::string audit = "coarse_grid";
    std::string tuples = "1;2;1,1;1,2;2,3;1,1,1;1,2,3";
    std::vector<std::int64_t> lengths = {20, 100};
    std::uint64_t length = 30;
    int k = 1;
    double y = 0;
    std::uint64_t alpha_points = 64;
    std::uint64_t j = 0;
    // output
    std::string output = "";
    std::string format = "csv";

    bool operator==(const ExperimentConfig&) const = default;
};

namespace config_detail {

using Field = std::variant<std::string ExperimentConfig::*, std::uint64_t ExperimentConfig::*, int ExperimentConfig::*,
                           double ExperimentConfig::*, bool ExperimentConfig::*,
                           std::vector<std::int64_t> ExperimentConfig::*, std::vector<double> ExperimentConfig::*>;

struct Key {
    const char* name;
    Field field;
};

// Canonical order.
inline const std::vector<Key>& keys() {
    using C = ExperimentConfig;
    static const std::vector<Key> k = {
        {"command", &C::command},     {"family", &C::family},         {"p", &C::p},
        {"g", &C::g},                 {"d", &C::d},                   {"r", &C::r},
        {"seed", &C::seed},           {"exhaustive", &C::exhaustive}, {"samples", &C::samples},
        {"v_min", &C::v_min},         {"v_max", &C::v_max},           {"v_step", &C::v_step},
        {"h_max", &C::h_max},         {"oracle", &C::oracle},         {"alpha_grid", &C::alpha_grid},
        {"theta_grid", &C::theta_grid}, {"statistic", &C::statistic}, {"truncation", &C::truncation},
        {"grid", &C::grid},           {"tol", &C::tol},               {"s", &C::s},
        {"audit", &C::audit},         {"tuples", &C::tuples},         {"lengths", &C::lengths},
        {"length", &C::length},       {"k", &C::k},                   {"y", &C::y},
        {"alpha_points", &C::alpha_points}, {"j", &C::j},             {"output", &C::output},
        {"format", &C::format},
    };
    return k;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const char* b = text.data();
    const char* e = b + text.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || text.empty()) throw ConfigError({"invalid value for " + key + ": '" + text + "'"});
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(v)) throw ConfigError({"non-finite value for " + key});
    }
    return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    if (text.empty()) return out;
    std::size_t pos = 0;
    while (true) {
        const auto next = text.find(',', pos);
        out.push_back(parse_number<T>(key, text.substr(pos, next - pos)));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace config_detail

inline bool is_config_key(const std::string& key) {
    for (const auto& k : config_detail::keys())
        if (key == k.name) return true;
    return false;
}

/// Sets one key from its text form; unknown keys and malformed values throw ConfigError.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& text) {
    using namespace config_detail;
    for (const auto& k : keys()) {
        if (key != k.name) continue;
        std::visit(
            [&](auto ptr) {
                using T = std::remove_reference_t<decltype(c.*ptr)>;
                if constexpr (std::is_same_v<T, std::string>) {
                    c.*ptr = text;
                } else if constexpr (std::is_same_v<T, bool>) {
                    if (text == "true" || text == "1") c.*ptr = true;
                    else if (text == "false" || text == "0") c.*ptr = false;
                    else throw ConfigError({"invalid value for " + key + ": '" + text + "'"});
                } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
                    c.*ptr = parse_list<std::int64_t>(key, text);
                } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                    c.*ptr = parse_list<double>(key, text);
                } else {
                    c.*ptr = parse_number<T>(key, text);
                }
            },
            k.field);
        return;
    }
    throw ConfigError({"unknown key '" + key + "'"});
}

inline std::string get_config_value(const ExperimentConfig& c, const std::string& key) {
    using namespace config_detail;
    for (const auto& k : keys()) {
        if (key != k.name) continue;
        return std::visit(
            [&](auto ptr) -> std::string {
                const auto& v = c.*ptr;
                using T = std::remove_cvref_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::string>) {
                    return v;
                } else if constexpr (std::is_same_v<T, bool>) {
                    return v ? "true" : "false";
                } else if constexpr (std::is_same_v<T, double>) {
                    return format_double(v);
                } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
                    std::string s;
                    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
                    return s;
                } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                    std::string s;
                    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
                    return s;
                } else {
                    return std::to_string(v);
                }
            },
            k.field);
    }
    throw ConfigError({"unknown key '" + key + "'"});
}

/// (key, value) pairs in canonical order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : config_detail::keys()) out.emplace_back(k.name, get_config_value(c, k.name));
    return out;
}

inline std::string serialize_config(const ExperimentConfig& c) {
    std::string s;
    for (const auto& [k, v] : config_entries(c)) s += k + "=" + v + "\n";
    return s;
}

/// Parses key=value lines; blank lines and lines starting with '#' are ignored.
/// Every malformed line is reported.
inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> errors;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = config_detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected key=value");
            continue;
        }
        try {
            set_config_value(base, config_detail::trim(t.substr(0, eq)), config_detail::trim(t.substr(eq + 1)));
        } catch (const ConfigError& e) {
            errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!errors.empty()) throw ConfigError(errors);
    return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
    std::ifstream f(path);
    if (!f) throw ConfigError({"cannot read config file '" + path + "'"});
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

/// "1;2,2;1,2,3" -> {{1}, {2,2}, {1,2,3}}.
inline std::vector<std::vector<std::int64_t>> parse_tuples(const std::string& text) {
    std::vector<std::vector<std::int64_t>> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto next = text.find(';', pos);
        const auto part = config_detail::trim(text.substr(pos, next - pos));
        if (part.empty()) throw ConfigError({"empty tuple in '" + text + "'"});
        out.push_back(config_detail::parse_list<std::int64_t>("tuples", part));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> c = {"scan", "gmax", "random-model", "constants", "extremal", "audit"};
    return c;
}

inline const std::vector<std::string>& audit_names() {
    static const std::vector<std::string> a = {"joint_moment", "short_sum", "max_short_sum", "tail_moment", "coarse_grid"};
    return a;
}

inline FamilySpec family_spec(const ExperimentConfig& c) {
    FamilySpec s;
    s.kind = family_kind_from_string(c.family);
    s.m = c.p;
    s.g = c.g;
    s.d = c.d;
    s.r = c.r;
    return s;
}

/// Every violation at once; empty means valid.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> out;
    auto contains = [](const std::vector<std::string>& v, const std::string& x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };
    if (!contains(command_names(), c.command)) out.push_back("unknown command '" + c.command + "'");
    if (c.format != "csv" && c.format != "json") out.push_back("format must be csv or json");

    const bool uses_family = c.command == "scan" || c.command == "audit";
    if (uses_family) {
        bool known = true;
        FamilyKind kind{};
        try {
            kind = family_kind_from_string(c.family);
        } catch (const std::exception&) {
            known = false;
            out.push_back("unknown family '" + c.family + "'");
        }
        if (known) {
            if (kind == FamilyKind::extremal) {
                if (c.p < 3) out.push_back("extremal period must be at least 3");
                if (c.p > 1000) out.push_back("extremal period too large (field exceeds 2^30)");
            } else if (!is_prime(c.p)) {
                out.push_back("p not prime");
            } else if (c.p < 5 || c.p >= (1ull << 31)) {
                out.push_back("p must lie in [5, 2^31)");
            }
            if (kind == FamilyKind::gen_kloosterman) {
                if (c.d < 1) out.push_back("d must be positive");
                else if (c.d % 2 == 0) out.push_back("d must be odd");
            }
            if (kind == FamilyKind::hyper_kloosterman_twist && (c.r < 1 || c.r > 8))
                out.push_back("r must lie in [1, 8] for the twisted family");
            if (kind == FamilyKind::birch && is_prime(c.p)) {
                try {
                    check_birch_polynomial(c.g, c.p);
                } catch (const std::exception& e) {
                    out.push_back(e.what());
                }
            }
        }
        if (!c.exhaustive && c.samples == 0) out.push_back("samples must be positive for a subsample");
    }
    if (c.command == "scan") {
        if (!(c.v_step > 0)) out.push_back("v_step must be positive");
        if (c.v_max < c.v_min) out.push_back("v_max must be at least v_min");
        else if (c.v_step > 0 && (c.v_max - c.v_min) / c.v_step > 1e5) out.push_back("V grid too fine");
    }
    if (c.command == "gmax") {
        if (c.h_max < 1 || c.h_max > 100000) out.push_back("h_max must lie in [1, 100000]");
        if (c.oracle && c.h_max > 50) out.push_back("brute-force oracle limited to h_max <= 50");
        if (c.alpha_grid < 16 || c.theta_grid < 16) out.push_back("alpha_grid and theta_grid must be at least 16");
    }
    if (c.command == "random-model" || c.command == "constants") {
        if (c.r < 1 || c.r > 3) out.push_back("r must be 1, 2 or 3 for the samplers");
    }
    if (c.command == "random-model") {
        if (c.statistic != "max" && c.statistic != "psi") out.push_back("statistic must be max or psi");
        if (c.statistic == "max") {
            if (c.truncation < 64) out.push_back("truncation must be at least 64");
            if (c.grid != 0 && c.grid < 8ull * static_cast<std::uint64_t>(std::max(c.truncation, 0)))
                out.push_back("grid must be 0 or at least 8 * truncation");
        } else if (c.p < 1000) {
            out.push_back("psi model needs p >= 1000");
        }
        if (c.samples == 0) out.push_back("samples must be positive");
        if (!(c.v_step > 0)) out.push_back("v_step must be positive");
    }
    if (c.command == "constants") {
        if (!(c.tol > 0)) out.push_back("tol must be positive");
        const double cube_root = std::cbrt(static_cast<double>(c.p));
        for (double s : c.s) {
            if (s < 2) out.push_back("s below 2");
            else if (s > cube_root) out.push_back("s exceeds m^{1/3}");
        }
    }
    if (c.command == "extremal" && (c.p < 3 || c.p > 1000)) out.push_back("extremal period must lie in [3, 1000]");
    if (c.command == "audit") {
        if (!contains(audit_names(), c.audit)) out.push_back("unknown audit '" + c.audit + "'");
        if (c.audit == "joint_moment") {
            try {
                for (const auto& t : parse_tuples(c.tuples))
                    if (t.empty() || t.size() > 3) out.push_back("tuples must have 1 to 3 entries");
            } catch (const ConfigError& e) {
                out.push_back(e.what());
            }
        }
        if (c.audit == "short_sum") {
            if (c.lengths.empty()) out.push_back("lengths must be non-empty");
            for (auto L : c.lengths)
                if (L < 0 || static_cast<std::uint64_t>(L) >= c.p) out.push_back("lengths must lie in [0, p)");
        }
        if (c.audit == "max_short_sum" && (c.length < 1 || static_cast<double>(c.length) > std::pow(static_cast<double>(c.p), 7.0 / 12)))
            out.push_back("length must lie in [1, p^{7/12}]");
        if (c.audit == "tail_moment") {
            if (c.k < 1 || c.k > 4) out.push_back("k must lie in [1, 4]");
            if (c.alpha_points < 1) out.push_back("alpha_points must be positive");
            if (c.y < 0) out.push_back("y must be non-negative");
        }
    }
    return out;
}

}  // namespace pvmax
