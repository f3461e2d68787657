// Experiment runner behind the command line: config in, table plus metadata out.
#pragma once

#include <fftw3.h>

#include <boost/version.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "config.hpp"
#include "constants.hpp"
#include "distribution.hpp"
#include "errors.hpp"
#include "gmax.hpp"
#include "parallel.hpp"
#include "random_model.hpp"

namespace pvmax {

inline constexpr const char* version = "1.0.0";

using ordered_json = nlohmann::ordered_json;
using Progress = std::function<void(const std::string&)>;

struct RunOutput {
    int exit_code = 0;
    std::string format = "csv";
    std::vector<std::string> columns;
    std::vector<std::vector<ordered_json>> rows;
    ordered_json summary = ordered_json::object();
    ordered_json metadata = ordered_json::object();
    ordered_json error;  // null on success
};

namespace experiment_detail {

inline std::vector<double> v_grid(const ExperimentConfig& c) {
    std::vector<double> v;
    const auto n = static_cast<long>(std::floor((c.v_max - c.v_min) / c.v_step + 1e-9));
    for (long i = 0; i <= n; ++i) v.push_back(std::round((c.v_min + static_cast<double>(i) * c.v_step) * 1e12) / 1e12);
    return v;
}

inline SampleMode sample_mode(const ExperimentConfig& c) {
    return c.exhaustive ? SampleMode::all() : SampleMode::subsample(c.samples, c.seed);
}

inline void add_kv(RunOutput& out, const std::string& key, ordered_json value) { out.rows.push_back({key, std::move(value)}); }

inline void report_rows(RunOutput& out, const AuditReport& rep) {
    out.columns = {"quantity", "value"};
    add_kv(out, "id", rep.id);
    add_kv(out, "assumption", rep.assumption);
    add_kv(out, "measured", rep.measured);
    add_kv(out, "bound", rep.bound);
    add_kv(out, "constant", rep.constant);
    add_kv(out, "pass", rep.pass);
    add_kv(out, "skipped", rep.skipped);
    add_kv(out, "details", rep.details);
    for (const auto& [k, v] : rep.values) add_kv(out, k, v);
    out.summary = {{"assumption", rep.assumption}, {"measured", rep.measured}, {"bound", rep.bound},
                   {"constant", rep.constant}, {"pass", rep.pass}, {"skipped", rep.skipped}};
}

inline void run_scan(const ExperimentConfig& c, RunOutput& out, const Progress& progress) {
    const Family fam(family_spec(c));
    const auto mode = sample_mode(c);
    progress("scan: " + c.family + " m=" + std::to_string(c.p) + ", " +
             std::to_string(mode.exhaustive ? fam.size() : std::min<std::uint64_t>(mode.count, fam.size())) + " members");
    const auto res = scan_family(fam, mode);
    out.columns = {"family", "m", "V", "phi", "psi_plus", "psi_minus", "count"};
    const auto n = res.max_tail.count();
    for (double V : v_grid(c))
        out.rows.push_back({c.family, c.p, V, phi_at(res.max_tail, V), phi_at(res.psi_tail, V), lower_tail_at(res.psi_tail, V), n});
    double witness = 0, mean = 0;
    for (const auto& s : res.members) {
        witness = std::max(witness, s.half_abs);
        mean += s.max_norm;
    }
    out.summary["members"] = n;
    out.summary["mean_max"] = mean / static_cast<double>(n);
    out.summary["largest_max"] = res.max_tail.stats.back();
    out.summary["largest_half_sum"] = witness;
    const auto fit = loglog_slope(res.max_tail, v_grid(c));
    out.summary["slope_points"] = fit.points;
    if (fit.refused) {
        out.summary["slope_status"] = "refused: " + fit.message;
    } else {
        out.summary["slope_status"] = fit.caveat ? "caveat: " + fit.message : "ok";
        out.summary["slope"] = fit.slope;
        out.summary["slope_stderr"] = fit.stderr_;
        out.summary["slope_intercept"] = fit.intercept;
        out.summary["slope_window"] = fit.window;
    }
}

inline void run_gmax(const ExperimentConfig& c, RunOutput& out, const Progress& progress) {
    out.columns = {"H", "exact", "asymptotic"};
    if (c.oracle) out.columns.insert(out.columns.end(), {"bruteforce", "alpha_star", "theta_star"});
    for (int H = 1; H <= c.h_max; ++H) {
        std::vector<ordered_json> row = {H, g_exact(H), g_asymptotic(H)};
        if (c.oracle) {
            progress("gmax: brute force H=" + std::to_string(H));
            const auto b = g_bruteforce(H, c.alpha_grid, c.theta_grid);
            row.insert(row.end(), {*b.bruteforce, b.alpha_star, b.theta_star});
        }
        out.rows.push_back(std::move(row));
    }
}

inline void run_random_model(const ExperimentConfig& c, RunOutput& out, const Progress& progress) {
    if (c.statistic == "max") {
        const std::size_t G = c.grid ? c.grid : 8 * static_cast<std::size_t>(c.truncation);
        progress("random-model: " + std::to_string(c.samples) + " draws of M_X, H=" + std::to_string(c.truncation));
        const auto tail = make_tail(sample_m_x_many(c.r, c.truncation, G, c.samples, c.seed));
        out.columns = {"r", "H", "V", "tail", "stderr", "count"};
        for (double V : v_grid(c)) {
            const double p = phi_at(tail, V);
            out.rows.push_back({c.r, c.truncation, V, p, binomial_stderr(p, tail.count()), tail.count()});
        }
        double mean = 0;
        for (double x : tail.stats) mean += x;
        out.summary = {{"alpha_grid", G}, {"mean", mean / static_cast<double>(tail.count())}};
    } else {
        progress("random-model: " + std::to_string(c.samples) + " draws of the psi model, m=" + std::to_string(c.p));
        const auto tail = make_tail(psi_model_samples(c.r, c.p, c.samples, c.seed));
        out.columns = {"r", "m", "V", "psi_plus", "psi_minus", "stderr", "count"};
        for (double V : v_grid(c)) {
            const double p = phi_at(tail, V);
            out.rows.push_back({c.r, c.p, V, p, lower_tail_at(tail, V), binomial_stderr(p, tail.count()), tail.count()});
        }
    }
}

inline void run_constants(const ExperimentConfig& c, RunOutput& out, const Progress& progress) {
    progress("constants: r=" + std::to_string(c.r));
    const auto mc = a0_b0(c.r, c.tol);
    out.columns = {"quantity", "value"};
    add_kv(out, "r", mc.r);
    add_kv(out, "N", mc.N);
    add_kv(out, "f_integral", mc.integral.value);
    add_kv(out, "f_integral_error", mc.integral.error);
    add_kv(out, "f_integral_tail", mc.integral.tail);
    add_kv(out, "f_integral_tail_bound", mc.integral.tail_bound);
    add_kv(out, "A0", mc.A0);
    add_kv(out, "B0", mc.B0);
    add_kv(out, "B", mc.B);
    out.summary = {{"f_integral", mc.integral.value}, {"A0", mc.A0}, {"B0", mc.B0}, {"B", mc.B}};
    for (double s : c.s) {
        progress("constants: Laplace transform at s=" + config_detail::format_double(s));
        const double exact = laplace_log_product(s, c.p, c.r);
        const double asym = laplace_asymptotic(s, mc);
        const std::string tag = "[s=" + config_detail::format_double(s) + "]";
        add_kv(out, "log_laplace" + tag, exact);
        add_kv(out, "laplace_leading" + tag, asym);
        add_kv(out, "residual_over_log_s_squared" + tag, std::abs(exact - asym) / std::pow(std::log(s), 2));
    }
}

inline std::vector<std::int64_t> extremal_moment_frequencies(const ExtremalFamily& ex) {
    std::vector<std::int64_t> hs;
    for (std::int64_t h : {1L, 2L, 3L, 5L, 8L, 13L, ex.h_max, -1L, -2L, -3L, -7L, ex.h_min})
        if (h >= ex.h_min && h <= ex.h_max && h != 0 && std::find(hs.begin(), hs.end(), h) == hs.end()) hs.push_back(h);
    return hs;
}

inline void run_extremal(const ExperimentConfig& c, RunOutput& out, const Progress& progress) {
    FamilySpec spec;
    spec.kind = FamilyKind::extremal;
    spec.m = c.p;
    progress("extremal: building GF(2^r) family for m=" + std::to_string(c.p));
    const Family fam(spec);
    const auto& ex = *fam.extremal();
    const auto phi = fam.member(0);  // a = 1
    complex half{};
    for (std::uint64_t n = 0; n <= c.p / 2; ++n) half += phi.values[n];
    const double half_norm = std::abs(half) / std::sqrt(static_cast<double>(c.p));
    const double log_term = std::log(static_cast<double>(c.p)) / std::numbers::pi;
    const auto spectrum = extremal_spectrum(ex, ex.field.one());
    bool step = true;
    for (std::int64_t h = ex.h_min; h <= ex.h_max; ++h) step &= spectrum[static_cast<std::size_t>(h - ex.h_min)] == (h > 0 ? 1 : -1);
    const auto ft = fourier_transform(phi);
    double ft_dev = 0;
    for (std::int64_t h = ex.h_min; h <= ex.h_max; ++h) ft_dev = std::max(ft_dev, std::abs(ft.at(h) - complex(h > 0 ? 1 : -1)));
    progress("extremal: joint moments over all 2^" + std::to_string(ex.r) + " elements");
    const auto hs = extremal_moment_frequencies(ex);
    const auto mom = extremal_joint_moments(ex, hs);
    out.columns = {"quantity", "value"};
    add_kv(out, "m", c.p);
    add_kv(out, "r", ex.r);
    add_kv(out, "members", fam.size());
    add_kv(out, "half_sum", half_norm);
    add_kv(out, "log_m_over_pi", log_term);
    add_kv(out, "half_sum_gap", half_norm - log_term);
    add_kv(out, "step_spectrum", step);
    add_kv(out, "fourier_deviation", ft_dev);
    add_kv(out, "worst_joint_moment", mom.worst);
    add_kv(out, "weil_bound", mom.weil);
    for (const auto& [pos, v] : mom.moments) {
        std::string name = "moment(";
        for (std::size_t i = 0; i < pos.size(); ++i) name += (i ? "," : "") + std::to_string(hs[static_cast<std::size_t>(pos[i])]);
        add_kv(out, name + ")", v);
    }
    out.summary = {{"half_sum_gap", half_norm - log_term}, {"step_spectrum", step},
                   {"worst_joint_moment", mom.worst}, {"weil_bound", mom.weil}};
}

inline void run_audit(const ExperimentConfig& c, RunOutput& out, const Progress& progress) {
    const Family fam(family_spec(c));
    const auto mode = sample_mode(c);
    progress("audit: " + c.audit + " on " + c.family + " m=" + std::to_string(c.p));
    AuditReport rep;
    if (c.audit == "joint_moment") {
        rep = joint_moment_audit(fam, parse_tuples(c.tuples), mode);
    } else if (c.audit == "short_sum") {
        std::vector<std::uint64_t> L(c.lengths.begin(), c.lengths.end());
        rep = short_sum_moment_audit(fam, L, mode);
    } else if (c.audit == "max_short_sum") {
        rep = max_short_sum_audit(fam, c.length, mode);
    } else if (c.audit == "tail_moment") {
        rep = tail_moment_audit(fam, c.k, c.y, c.alpha_points, mode);
    } else {
        rep = coarse_grid_audit(fam, mode, c.j);
    }
    report_rows(out, rep);
}

inline ordered_json metadata(const ExperimentConfig& c) {
    ordered_json m;
    m["tool"] = "pvmax";
    m["version"] = version;
    m["command"] = c.command;
    m["seed"] = c.seed;
    m["workers"] = worker_count();
    m["fftw"] = std::string(fftw_version);
    m["boost"] = BOOST_LIB_VERSION;
    m["compiler"] = __VERSION__;
    ordered_json cfg;
    for (const auto& [k, v] : config_entries(c)) cfg[k] = v;
    m["config"] = cfg;
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["started_utc"] = buf;
    return m;
}

inline void check_finite(const ordered_json& j, const std::string& where) {
    if (j.is_number_float() && !std::isfinite(j.get<double>())) throw NumericError("output", "non-finite value in " + where);
    if (j.is_structured())
        for (const auto& x : j) check_finite(x, where);
}

inline ordered_json error_record(int code, const std::string& kind, const std::string& message,
                                 const std::string& audit_id = "", const std::vector<std::string>& diagnostics = {}) {
    ordered_json e;
    e["error"] = kind;
    e["exit_code"] = code;
    e["message"] = message;
    if (!audit_id.empty()) e["audit_id"] = audit_id;
    if (!diagnostics.empty()) e["diagnostics"] = diagnostics;
    return e;
}

}  // namespace experiment_detail

/// Runs one experiment. Exit codes: 0 success, 2 configuration error, 3 numeric failure.
inline RunOutput run(const ExperimentConfig& c, const Progress& progress = [](const std::string&) {}) {
    using namespace experiment_detail;
    RunOutput out;
    out.format = c.format == "json" ? "json" : "csv";
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto diag = validate(c);
        if (!diag.empty()) throw ConfigError(diag);
        out.metadata = metadata(c);
        if (c.command == "scan") run_scan(c, out, progress);
        else if (c.command == "gmax") run_gmax(c, out, progress);
        else if (c.command == "random-model") run_random_model(c, out, progress);
        else if (c.command == "constants") run_constants(c, out, progress);
        else if (c.command == "extremal") run_extremal(c, out, progress);
        else run_audit(c, out, progress);
        for (const auto& row : out.rows)
            for (const auto& v : row) check_finite(v, c.command + " output");
        check_finite(out.summary, c.command + " summary");
    } catch (const ConfigError& e) {
        out.exit_code = 2;
        out.error = error_record(2, "config", e.what(), "", e.diagnostics());
    } catch (const NumericError& e) {
        out.exit_code = 3;
        out.error = error_record(3, "numeric", e.what(), e.audit_id);
    } catch (const std::invalid_argument& e) {
        out.exit_code = 2;
        out.error = error_record(2, "config", e.what());
    } catch (const std::exception& e) {
        out.exit_code = 3;
        out.error = error_record(3, "numeric", e.what(), c.command);
    }
    if (out.exit_code != 0) {
        out.rows.clear();
        out.summary = ordered_json::object();
    }
    out.metadata["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline std::string csv_cell(const ordered_json& v) {
    if (v.is_number_float()) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, v.get<double>());
        return std::string(buf, res.ptr);
    }
    if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    const auto s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

/// The data part only: CSV header and rows, or the JSON "data" value. Excludes metadata.
inline std::string render_body(const RunOutput& out) {
    if (out.format == "json") {
        ordered_json data;
        ordered_json rows = ordered_json::array();
        for (const auto& row : out.rows) {
            ordered_json rec;
            for (std::size_t i = 0; i < out.columns.size(); ++i) rec[out.columns[i]] = row[i];
            rows.push_back(rec);
        }
        data["rows"] = rows;
        data["summary"] = out.summary;
        return data.dump(2);
    }
    std::string s;
    for (std::size_t i = 0; i < out.columns.size(); ++i) s += (i ? "," : "") + out.columns[i];
    s += "\n";
    for (const auto& row : out.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + csv_cell(row[i]);
        s += "\n";
    }
    return s;
}

inline std::string render(const RunOutput& out) {
    if (out.format == "json") {
        ordered_json doc;
        doc["metadata"] = out.metadata;
        doc["data"] = ordered_json::parse(render_body(out));
        return doc.dump(2) + "\n";
    }
    std::string s;
    for (const auto& [k, v] : out.metadata.items()) {
        if (k == "config") {
            for (const auto& [ck, cv] : v.items()) s += "# config." + ck + ": " + cv.get<std::string>() + "\n";
        } else {
            s += "# " + k + ": " + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
        }
    }
    for (const auto& [k, v] : out.summary.items()) s += "# summary." + k + ": " + (v.is_string() ? v.get<std::string>() : csv_cell(v)) + "\n";
    return s + render_body(out);
}

}  // namespace pvmax
