#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "pvmax/experiment.hpp"

namespace {

std::string dashed(std::string s) {
    for (auto& ch : s)
        if (ch == '_') ch = '-';
    return s;
}

bool is_bool_key(const std::string& k) { return k == "exhaustive" || k == "oracle"; }

int fail(const pvmax::ordered_json& record) {
    std::cerr << record.dump() << "\n";
    return record.value("exit_code", 1);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Experiments on maxima of partial sums of trace functions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pvmax::version);

    std::string config_path;
    unsigned workers = 0;
    bool to_stdout = false;
    bool quiet = false;
    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;

    const std::map<std::string, std::string> help = {
        {"scan", "Scan a family and tabulate Phi(V), Psi(V)"},
        {"gmax", "Exact, asymptotic and brute-force values of the constant G(H)"},
        {"random-model", "Monte Carlo tails of the random model"},
        {"constants", "Model constants and the Laplace transform"},
        {"extremal", "Extremal GF(2^r) family checks"},
        {"audit", "Assumption audits on a family"},
    };
    for (const auto& name : pvmax::command_names()) {
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", config_path, "key=value config file; command-line options override it");
        sub->add_option("--workers", workers, "worker threads (default: PVMAX_WORKERS or all cores)");
        sub->add_flag("--stdout", to_stdout, "write data to standard output");
        sub->add_flag("--quiet", quiet, "no progress on standard error");
        for (const auto& [key, value] : pvmax::config_entries(pvmax::ExperimentConfig{})) {
            if (key == "command") continue;
            if (is_bool_key(key)) {
                sub->add_flag("--" + dashed(key) + "{true}", values[key], "set " + key + " (=false to clear)")
                    ->expected(0, 1);
            } else {
                sub->add_option("--" + dashed(key), values[key], key + " (default " + (value.empty() ? "''" : value) + ")");
            }
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(pvmax::experiment_detail::error_record(2, "config", e.what()));
    }
    const auto* sub = app.get_subcommands().front();

    pvmax::ExperimentConfig cfg;
    try {
        if (!config_path.empty()) cfg = pvmax::load_config(config_path);
        cfg.command = sub->get_name();
        for (const auto& [key, text] : values)
            if (sub->count("--" + dashed(key)) > 0) pvmax::set_config_value(cfg, key, text);
    } catch (const pvmax::ConfigError& e) {
        return fail(pvmax::experiment_detail::error_record(2, "config", e.what(), "", e.diagnostics()));
    }
    if (workers > 0) pvmax::set_worker_count(workers);

    auto progress = [&](const std::string& msg) {
        if (!quiet) std::cerr << "[pvmax] " << msg << "\n";
    };
    const auto out = pvmax::run(cfg, progress);
    if (out.exit_code != 0) return fail(out.error);

    const auto text = pvmax::render(out);
    if (to_stdout) {
        std::cout << text;
        return 0;
    }
    const std::string path = cfg.output.empty() ? "pvmax_" + cfg.command + "." + out.format : cfg.output;
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) return fail(pvmax::experiment_detail::error_record(2, "config", "cannot write '" + path + "'"));
    progress("wrote " + path);
    return 0;
}
