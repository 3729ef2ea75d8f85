// gph: command-line front end for the hierarchy experiments.
//
//   gph run <experiment> [--config FILE] [flags...]
//   gph list
//
// Options come from a key=value config file overlaid by command-line flags
// (flags win).  Reports are written as <out>/<experiment>.csv plus a JSON
// summary; the CSV body is deterministic for a fixed config.  Exit codes:
// 0 success, 2 usage error, 3 failed acceptance verdict under --assert.

#include <gph/experiments.hpp>
#include <gph/version.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct FlagSpec {
    const char* cli;
    const char* key;
    const char* help;
    std::string value;
    CLI::Option* opt = nullptr;
};

int run_command(const std::string& experiment, gph::OptionMap opts, const std::string& out_dir,
                bool assert_mode, const std::string& dump_path, const std::string& emit_config) {
    gph::Report rep = gph::run_experiment(experiment, std::move(opts));

    const std::string dir = out_dir.empty() ? gph::default_output_dir() : out_dir;
    gph::write_report_files(rep, dir, gph::code_revision);
    if (!emit_config.empty()) gph::write_text_file(emit_config, rep.config.serialize());

    if (!dump_path.empty()) {
        if (experiment != "duhamel-decay")
            throw std::invalid_argument("--dump-term is only available for duhamel-decay");
        gph::DensityMatrix term = gph::decay_term_snapshot(rep.config);
        std::ofstream out(dump_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + dump_path);
        gph::write_matrix(out, term);
    }

    std::cout << "experiment: " << rep.experiment << "\n";
    std::cout << "revision:   " << gph::code_revision << "\n";
    std::cout << "seed:       " << rep.config.get("seed", "-") << "\n";
    std::cout << "config:\n";
    for (const auto& [k, v] : rep.config.entries()) std::cout << "  " << k << "=" << v << "\n";
    std::cout << "summary:\n";
    for (const auto& [k, v] : rep.metrics)
        std::cout << "  " << k << " = " << gph::format_double(v) << "\n";
    for (const auto& note : rep.notes) std::cout << "note: " << note << "\n";
    std::cout << "rows:    " << rep.rows.size() << "\n";
    std::cout << "files:   " << dir << "/" << rep.experiment << ".csv, " << dir << "/"
              << rep.experiment << ".json\n";
    std::cout << "verdict: " << (rep.pass ? "PASS" : "FAIL") << "\n";

    if (assert_mode && !rep.pass) return 3;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral-space laboratory for the randomized Gross-Pitaevskii hierarchy"};
    app.require_subcommand(1);

    CLI::App* run = app.add_subcommand("run", "run an experiment and write CSV + JSON reports");
    std::string experiment;
    run->add_option("experiment", experiment, "one of: " + [] {
                        std::string s;
                        for (const auto& n : gph::experiment_names()) s += n + " ";
                        return s;
                    }())
        ->required();
    std::string config_path;
    run->add_option("--config", config_path, "key=value config file (flags override it)");
    std::vector<std::string> set_entries;
    run->add_option("--set", set_entries, "extra key=value override (repeatable)");
    std::string out_dir;
    run->add_option("--out", out_dir, "output directory (default: $GPH_OUTPUT_DIR or .)");
    bool assert_mode = false;
    run->add_flag("--assert", assert_mode, "exit 3 when the experiment's verdict is FAIL");
    std::string dump_path;
    run->add_option("--dump-term", dump_path,
                    "write the realized order-k term at t=T in lattice text format "
                    "(duhamel-decay only)");
    std::string emit_config;
    run->add_option("--emit-config", emit_config, "write the fully resolved config file");

    std::vector<FlagSpec> flags = {
        {"--d", "d", "spatial dimension (1..3)"},
        {"--K", "K", "lattice cutoff"},
        {"--k", "k", "hierarchy order"},
        {"--j", "j", "collision pair index"},
        {"--n", "n", "base order of the collision word"},
        {"--alpha", "alpha", "regularity exponent"},
        {"--alphas", "alphas", "comma list of regularity exponents"},
        {"--n-max", "n-max", "deepest Duhamel level"},
        {"--cutoffs", "cutoffs", "comma list of lattice cutoffs"},
        {"--ells", "ells", "comma list of word lengths"},
        {"--samples", "samples", "ensemble / omega sample count"},
        {"--seeds", "seeds", "number of seeds to sweep"},
        {"--seed", "seed", "master seed (decimal or 0x hex)"},
        {"--mode", "mode", "deterministic | dependent | independent"},
        {"--method", "method", "omega average: exact | enumeration | montecarlo"},
        {"--source", "source", "a priori data: ensemble | nclass | nls"},
        {"--ensemble", "ensemble", "thm1-ratio data: random | adversarial"},
        {"--T", "T", "time horizon (duhamel-decay: omit to calibrate)"},
        {"--t1", "t1", "outer time for boardgame-demo"},
        {"--t-end", "t-end", "integration horizon for nls-residual"},
        {"--q", "q", "Gauss-Legendre points per nesting level"},
        {"--support", "support", "sparse ensemble support size"},
        {"--C1", "C1", "a priori norm constant"},
        {"--dt-list", "dt-list", "comma list of time steps"},
        {"--k-list", "k-list", "comma list of hierarchy orders"},
        {"--lambda-grid", "lambda-grid", "tail grid as multiples of the rms norm"},
        {"--threads", "threads", "worker pool cap"},
    };
    for (auto& f : flags) f.opt = run->add_option(f.cli, f.value, f.help);

    CLI::App* list = app.add_subcommand("list", "list the available experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (list->parsed()) {
            for (const auto& n : gph::experiment_names()) std::cout << n << "\n";
            return 0;
        }
        gph::OptionMap opts;
        if (!config_path.empty()) opts = gph::OptionMap::load(config_path);
        for (const auto& f : flags)
            if (f.opt->count() > 0) opts.set(f.key, f.value);
        for (const auto& entry : set_entries) {
            const auto eq = entry.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got '" + entry + "'");
            opts.set(gph::trim(entry.substr(0, eq)), gph::trim(entry.substr(eq + 1)));
        }
        return run_command(experiment, std::move(opts), out_dir, assert_mode, dump_path,
                           emit_config);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
