// spinlab: batch experiment runner for the conservative spin-system lab.
//
//   spinlab run <config.json> [--out DIR] [--seed N] [--threads K]
//   spinlab acceptance [--criteria 1,2,...] [--seed N]
//
// Exit codes: 0 success, 2 config/validation error, 3 numerical failure.

#include "spinlab/acceptance.hpp"
#include "spinlab/errors.hpp"
#include "spinlab/experiments.hpp"
#include "spinlab/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

int do_run(const std::string& config_path, const std::string& out_dir, long long seed,
           int threads) {
    nlohmann::json config;
    {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot open config file " << config_path << "\n";
            return 2;
        }
        try {
            in >> config;
        } catch (const std::exception& e) {
            std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
            return 2;
        }
    }

    std::filesystem::path out = out_dir;
    if (out.empty()) {
        if (config.contains("out") && config.at("out").is_string())
            out = config.at("out").get<std::string>();
        else
            out = ".";
    }

    try {
        const spinlab::RunResult res = spinlab::run_experiment(config, out, seed, threads);
        for (const std::string& f : res.outputs)
            std::cout << "wrote " << (out / f).string() << "\n";
        return 0;
    } catch (const spinlab::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const spinlab::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int do_acceptance(const std::string& criteria_csv, long long seed) {
    std::vector<int> ids;
    if (!criteria_csv.empty()) {
        std::stringstream ss(criteria_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                ids.push_back(std::stoi(tok));
            } catch (...) {
                std::cerr << "error: bad criterion id '" << tok << "'\n";
                return 2;
            }
        }
    }
    const std::uint64_t s = seed >= 0 ? static_cast<std::uint64_t>(seed) : 20260810ULL;
    const auto results = spinlab::run_acceptance(ids, s);
    bool all_ok = true;
    for (const auto& r : results) {
        std::cout << spinlab::format_result(r) << "\n";
        all_ok = all_ok && r.passed;
    }
    if (results.empty()) {
        std::cerr << "error: no matching criteria\n";
        return 2;
    }
    return all_ok ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conservative spin-system numerical laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, criteria_csv;
    long long seed = -1;
    int threads = 0;

    CLI::App* run = app.add_subcommand("run", "run one experiment from a JSON config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (default: config 'out' or cwd)");
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--threads", threads, "worker threads (default: SPINLAB_THREADS or hw)");

    CLI::App* acc = app.add_subcommand("acceptance", "run the acceptance suite");
    acc->add_option("--criteria", criteria_csv, "comma-separated criterion ids (default all)");
    acc->add_option("--seed", seed, "acceptance seed");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return do_run(config_path, out_dir, seed, threads);
    return do_acceptance(criteria_csv, seed);
}
