// sharpflow <subcommand> --config <path> [--out <dir>]

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "sharpflow/harness.hpp"

namespace hs = sharpflow::harness;

namespace {

int report(const hs::RunRecord& r) {
    for (const auto& a : r.assertions)
        std::printf("%s  %-60s value=%.6g tol=%.6g\n", a.pass ? "PASS" : "FAIL", a.name.c_str(), a.value, a.tol);
    if (!r.error.empty()) std::printf("ERROR %s\n", r.error.c_str());
    std::printf("%s: %s (config %s)\n", r.experiment.c_str(), r.all_pass() ? "all assertions passed" : "FAILED",
                r.config_hash.c_str());
    return r.all_pass() ? 0 : 1;
}

int run_experiment(hs::Experiment which, const std::string& config, const std::string& out) {
    hs::ExperimentConfig cfg;
    try {
        const hs::IniFile ini = config.empty() ? hs::IniFile{} : hs::load_ini(config);
        cfg = hs::load_experiment(ini, which);
    } catch (const sharpflow::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
    hs::RunRecord r;
    try {
        r = hs::run(cfg);
    } catch (const sharpflow::Error& e) {
        r.experiment = std::string(hs::name_of(which));
        r.config_hash = hs::config_hash(cfg);
        r.timestamp = hs::utc_timestamp();
        r.error = e.what();
    }
    hs::write_outputs(r, out);
    return report(r);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-field vs sharp-interface experiments"};
    app.require_subcommand(1);

    std::string config, out = "out";
    const std::map<std::string_view, std::string> blurbs = {
        {"verify-integrals", "inner-profile moments: quadrature vs closed forms"},
        {"reduce-check", "general law vs its constant-coefficient reduction"},
        {"evolve-sharp", "radial sharp-interface evolution"},
        {"evolve-diffuse", "radial phase-field evolution, one run per eps"},
        {"converge", "eps sweep of phase-field vs sharp radius"},
        {"lapd-check", "order of the signed-distance Laplacian expansion"},
    };
    for (const auto& [which, name] : hs::experiment_names) {
        auto* sub = app.add_subcommand(std::string(name), blurbs.at(name));
        sub->add_option("--config", config, "INI config file")->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory")->capture_default_str();
        sub->callback([which = which, &config, &out] { std::exit(run_experiment(which, config, out)); });
    }

    std::string diffuse_csv, sharp_csv;
    auto* cmp = app.add_subcommand("compare", "sup-norm radius discrepancy between two trajectory CSVs");
    cmp->add_option("--diffuse", diffuse_csv)->required()->check(CLI::ExistingFile);
    cmp->add_option("--sharp", sharp_csv)->required()->check(CLI::ExistingFile);
    cmp->callback([&] {
        try {
            const auto c = hs::compare_trajectories(hs::read_series_csv(diffuse_csv), hs::read_series_csv(sharp_csv));
            std::printf("max_err=%.17g t1_range=[%.17g, %.17g] points=%zu\n", c.max_err, c.t_lo, c.t_hi, c.points);
            std::exit(0);
        } catch (const sharpflow::Error& e) {
            std::fprintf(stderr, "%s\n", e.what());
            std::exit(2);
        }
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}
