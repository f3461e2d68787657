// Acceptance run: one PASS/FAIL line per criterion.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "pvmax/pvmax.hpp"

using namespace pvmax;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FamilySpec spec_of(FamilyKind kind, std::uint64_t m, int d = 1) {
    FamilySpec s;
    s.kind = kind;
    s.m = m;
    s.d = d;
    return s;
}

Outcome gmax_exact() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0;
    for (int H = 1; H <= 9; ++H) worst = std::max(worst, std::abs(*g_bruteforce(H).bruteforce - g_exact(H)));
    const double t = elapsed(t0);
    return {worst <= 1e-3 && t < 10, "max |brute - exact| = " + fmt("%.3g", worst) + ", " + fmt("%.2f s", t)};
}

Outcome gmax_asymptotic() {
    double C = 0;
    for (int H = 11; H <= 1001; H += 10) {
        const double lead = 2 * std::log(H) + 2 * std::log(2.0) + 2 * std::numbers::egamma;
        C = std::max(C, std::abs(g_exact(H) - lead) * H);
    }
    return {C <= 4, "calibrated C = max H |G(H) - lead| = " + fmt("%.4f", C) + " (bound 4)"};
}

Outcome fourier_structure() {
    const auto t0 = std::chrono::steady_clock::now();
    double imag = 0, excess = 0, parseval = 0;
    for (const auto& spec : {spec_of(FamilyKind::kloosterman, 101), spec_of(FamilyKind::birch, 499)}) {
        const Family fam(spec);
        const double N = spec.N();
        struct Acc {
            double imag = 0, excess = 0, parseval = 0;
        };
        const auto acc = parallel_reduce(
            fam.size(), Acc{},
            [&](std::size_t i) {
                const auto phi = fam.member(i);
                const auto S = fourier_transform(phi);
                Acc a;
                double e_phi = 0, e_hat = 0;
                for (const auto& v : phi.values) e_phi += std::norm(v);
                for (const auto& c : S.coeffs) {
                    a.imag = std::max(a.imag, std::abs(c.imag()));
                    a.excess = std::max(a.excess, std::abs(c) - N);
                    e_hat += std::norm(c);
                }
                a.parseval = std::abs(e_hat - e_phi) / e_phi;
                return a;
            },
            [](Acc x, Acc y) {
                return Acc{std::max(x.imag, y.imag), std::max(x.excess, y.excess), std::max(x.parseval, y.parseval)};
            },
            64);
        imag = std::max(imag, acc.imag);
        excess = std::max(excess, acc.excess);
        parseval = std::max(parseval, acc.parseval);
    }
    const double t = elapsed(t0);
    const bool ok = imag <= 1e-8 && excess <= 1e-9 && parseval <= 1e-6 && t < 60;
    return {ok, "max |Im| = " + fmt("%.2g", imag) + ", max |hat| - N = " + fmt("%.2g", excess) +
                    ", Parseval rel = " + fmt("%.2g", parseval) + ", " + fmt("%.1f s", t)};
}

Outcome plancherel() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0;
    Stream rng(2024, 4);
    for (const auto& spec : {spec_of(FamilyKind::kloosterman, 101), spec_of(FamilyKind::birch, 499),
                             spec_of(FamilyKind::gen_kloosterman, 211, 3)}) {
        const Family fam(spec);
        const double sq = std::sqrt(static_cast<double>(spec.m));
        for (int t = 0; t < 334; ++t) {
            const auto phi = fam.member(rng.below(fam.size()));
            const std::uint64_t x = rng.below(spec.m);
            complex direct{};
            for (std::uint64_t n = 0; n <= x; ++n) direct += phi.values[n];
            const auto rec = plancherel_partial_sum(fourier_transform(phi), x);
            worst = std::max(worst, std::abs(direct - rec) / sq);
        }
    }
    const double t = elapsed(t0);
    return {worst <= 1e-8 && t < 60, "1002 pairs, max |prefix - spectral| / sqrt(m) = " + fmt("%.2g", worst) + ", " + fmt("%.1f s", t)};
}

Outcome hyper_kloosterman() {
    const auto t0 = std::chrono::steady_clock::now();
    double diff = 0, bound = 0;
    double imag[4] = {0, 0, 0, 0};
    for (std::uint64_t p = 5; p <= 101; ++p) {
        if (!is_prime(p)) continue;
        const PrimeTables T(p);
        for (int r : {2, 3}) {
            const auto kl = hyper_kloosterman_all(r, p);
            const double scale = ((r - 1) % 2 ? -1.0 : 1.0) / std::pow(static_cast<double>(p), 0.5 * (r - 1));
            for (std::uint64_t n = 1; n < p; ++n) {
                complex s{};
                if (r == 2) {
                    for (std::uint64_t x = 1; x < p; ++x) s += T.e[(x + n * T.inv[x]) % p];
                } else {
                    for (std::uint64_t x = 1; x < p; ++x)
                        for (std::uint64_t y = 1; y < p; ++y) s += T.e[(x + y + n * T.inv[x * y % p]) % p];
                }
                s *= scale;
                diff = std::max(diff, std::abs(s - kl[n]));
                imag[r] = std::max(imag[r], std::abs(kl[n].imag()));
                bound = std::max(bound, std::abs(kl[n]) - r);
            }
        }
    }
    const double t = elapsed(t0);
    const bool ok = diff <= 1e-8 && imag[2] <= 1e-8 && imag[3] <= 1e-8 && bound <= 1e-9 && t < 60;
    return {ok, "max |table - direct| = " + fmt("%.2g", diff) + ", max |Im Kl_2| = " + fmt("%.2g", imag[2]) +
                    ", max |Im Kl_3| = " + fmt("%.3g", imag[3]) +
                    ", max |Kl| - r = " + fmt("%.3g", bound) + ", " + fmt("%.1f s", t)};
}

Outcome sampler_moments() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = 1000000;
    auto x = sample_traces(1, n, 606);
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        const double v2 = v * v;
        m1 += v;
        m2 += v2;
        m3 += v2 * v;
        m4 += v2 * v2;
    }
    m1 /= n;
    m2 /= n;
    m3 /= n;
    m4 /= n;
    std::sort(x.begin(), x.end());
    double cdf = 0;
    for (int k = 1; k <= 20; ++k) {
        const double target = k / 21.0;
        double lo = -2, hi = 2;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (sato_tate_cdf(mid) < target ? lo : hi) = mid;
        }
        const double q = 0.5 * (lo + hi);
        const double emp = static_cast<double>(std::upper_bound(x.begin(), x.end(), q) - x.begin()) / n;
        cdf = std::max(cdf, std::abs(emp - target));
    }
    const double t = elapsed(t0);
    const bool ok = std::abs(m2 - 1) <= 5e-3 && std::abs(m4 - 2) <= 2e-2 && std::abs(m1) <= 5e-3 && std::abs(m3) <= 5e-3 &&
                    cdf <= 5e-3 && t < 60;
    return {ok, "m1 = " + fmt("%.2g", m1) + ", m2 = " + fmt("%.5f", m2) + ", m3 = " + fmt("%.2g", m3) + ", m4 = " +
                    fmt("%.4f", m4) + ", CDF gap = " + fmt("%.2g", cdf) + ", " + fmt("%.1f s", t)};
}

Outcome trace_exponent() {
    const std::vector<double> eps = {0.05, 0.075, 0.1, 0.15, 0.2, 0.3};
    const std::uint64_t per = 2000000;
    const auto r1 = trace_lower_bound_probe(1, eps, per, 71);
    const auto r2 = trace_lower_bound_probe(2, eps, per, 72);
    const bool ok = r1.ok && r2.ok && r1.slope >= 1.4 && r1.slope <= 1.6 && r2.slope >= 4.5 && r2.slope <= 5.5;
    return {ok, "r=1 slope " + fmt("%.3f", r1.slope) + " +- " + fmt("%.3f", r1.slope_stderr) + ", r=2 slope " +
                    fmt("%.3f", r2.slope) + " +- " + fmt("%.3f", r2.slope_stderr) + ", " +
                    std::to_string(2 * eps.size() * per) + " samples"};
}

Outcome laplace() {
    const auto mc = a0_b0(1);
    const std::uint64_t m = 1000003;
    const double C = 5;  // calibrated
    double worst = 0;
    std::string d;
    for (double s : {10.0, 30.0, 100.0}) {
        const double res = std::abs(laplace_log_product(s, m, 1) - laplace_asymptotic(s, mc)) / std::pow(std::log(s), 2);
        worst = std::max(worst, res);
        d += "s=" + fmt("%g", s) + ": " + fmt("%.3f", res) + "  ";
    }
    return {worst <= C && std::isfinite(worst), d + "(calibrated C = 5)"};
}

Outcome model_vs_family() {
    const auto res = scan_family(Family(spec_of(FamilyKind::birch, 3001)), SampleMode::all());
    const auto model = make_tail(sample_m_x_many(1, 512, 4096, 10000, 909));
    bool ok = true;
    std::string d;
    for (double V : {0.8, 1.0, 1.2}) {
        const double a = phi_at(res.max_tail, V), b = phi_at(model, V);
        const double se = std::hypot(binomial_stderr(a, res.max_tail.count()), binomial_stderr(b, model.count()));
        const double tol = 0.05 + 3 * se;
        ok &= std::abs(a - b) <= tol;
        d += "V=" + fmt("%.1f", V) + ": family " + fmt("%.4f", a) + " model " + fmt("%.4f", b) + " tol " + fmt("%.3f", tol) + "  ";
    }
    return {ok, d};
}

Outcome extremal() {
    bool ok = true;
    std::string d;
    for (std::uint64_t m : {101u, 211u}) {
        ExperimentConfig c;
        c.command = "extremal";
        c.p = m;
        const auto out = run(c);
        if (out.exit_code != 0) return {false, out.error.dump()};
        const double gap = out.summary["half_sum_gap"].get<double>();
        const bool step = out.summary["step_spectrum"].get<bool>();
        const double worst = out.summary["worst_joint_moment"].get<double>();
        const double weil = out.summary["weil_bound"].get<double>();
        double ft_dev = 0;
        for (const auto& row : out.rows)
            if (row[0] == "fourier_deviation") ft_dev = row[1].get<double>();
        ok &= std::abs(gap) <= 3 && step && ft_dev <= 1e-9 && worst <= 2 * weil;
        d += "m=" + std::to_string(m) + ": gap " + fmt("%.3f", gap) + ", step " + (step ? "exact" : "NO") + ", moments " +
             fmt("%.2g", worst) + " <= " + fmt("%.2g", 2 * weil) + "  ";
    }
    return {ok, d};
}

Outcome short_sums() {
    bool ok = true;
    std::string d;
    const std::uint64_t p = 499;
    const auto L55 = static_cast<std::uint64_t>(std::floor(std::pow(static_cast<double>(p), 0.55)));
    for (int dd : {1, 3}) {
        const auto rep = short_sum_moment_audit(Family(spec_of(FamilyKind::gen_kloosterman, p, dd)), {20, 100, L55});
        ok &= rep.pass;
        d += "d=" + std::to_string(dd) + ":";
        for (const auto& [k, v] : rep.values)
            if (k.rfind("ratio@", 0) == 0) d += " " + k.substr(6) + "->" + fmt("%.3f", v);
        d += " (<= " + fmt("%g", rep.bound) + ")  ";
    }
    return {ok, d + "solution counts match direct sums"};
}

Outcome coarse_grid() {
    const auto rep = coarse_grid_audit(Family(spec_of(FamilyKind::kloosterman, 2003)), SampleMode::subsample(10000, 1212));
    return {rep.pass, "exceedance " + fmt("%.4g", rep.measured) + " <= " + fmt("%.4g", rep.bound) + ", max gap/sqrt(m) " +
                          fmt("%.3f", rep.values[2].second)};
}

Outcome determinism() {
    std::vector<ExperimentConfig> configs;
    {
        ExperimentConfig c;
        c.family = "kloosterman";
        c.p = 503;
        c.exhaustive = false;
        c.samples = 2000;
        c.seed = 5;
        configs.push_back(c);
        c.format = "json";
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.command = "random-model";
        c.r = 2;
        c.truncation = 128;
        c.samples = 500;
        c.seed = 6;
        configs.push_back(c);
        c.statistic = "psi";
        c.p = 2003;
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.command = "audit";
        c.audit = "joint_moment";
        c.family = "gen-kloosterman";
        c.d = 3;
        c.p = 211;
        c.exhaustive = false;
        c.samples = 3000;
        c.seed = 8;
        configs.push_back(c);
        c.audit = "max_short_sum";
        c.length = 10;
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.command = "gmax";
        c.h_max = 4;
        c.oracle = true;
        c.alpha_grid = c.theta_grid = 256;
        configs.push_back(c);
    }
    int same = 0;
    for (const auto& c : configs) {
        set_worker_count(1);
        const auto a = render_body(run(c));
        set_worker_count(3);
        const auto b = render_body(run(c));
        set_worker_count(0);
        const auto again = render_body(run(parse_config(serialize_config(c))));
        same += (a == b && a == again && !a.empty());
    }
    return {same == static_cast<int>(configs.size()),
            std::to_string(same) + "/" + std::to_string(configs.size()) + " experiments byte-identical across reruns and worker counts"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> selected;
    app.add_option("--criterion", selected, "criteria to run (default: all)")->check(CLI::Range(1, 13));
    CLI11_PARSE(app, argc, argv);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"G exactness", gmax_exact},
        {"G asymptotics", gmax_asymptotic},
        {"Fourier structure", fourier_structure},
        {"Plancherel", plancherel},
        {"hyper-Kloosterman oracle", hyper_kloosterman},
        {"sampler moments", sampler_moments},
        {"trace tail exponent", trace_exponent},
        {"Laplace asymptotic", laplace},
        {"model vs family", model_vs_family},
        {"extremal construction", extremal},
        {"short sum fourth moment", short_sums},
        {"coarse grid", coarse_grid},
        {"determinism", determinism},
    };
    if (selected.empty())
        for (int i = 1; i <= 13; ++i) selected.push_back(i);
    int failed = 0;
    for (int i : selected) {
        const auto& [name, fn] = criteria[static_cast<std::size_t>(i - 1)];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %2d %-26s %s  [%.1f s]  %s\n", i, name.c_str(), o.pass ? "PASS" : "FAIL", elapsed(t0), o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
