// hwd: housing-wealth welfare and stochastic-dominance batch tool.

#include "hwd/error.hpp"
#include "hwd/kernels.hpp"
#include "hwd/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> bootstrap;
    std::vector<double> nu_grid;
    std::vector<int> orders;
    std::vector<std::string> deflators;
    std::optional<std::string> design;
    std::optional<std::string> input;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "run configuration (JSON)")->required();
    cmd->add_option("--seed", f.seed, "bootstrap seed");
    cmd->add_option("--bootstrap", f.bootstrap, "bootstrap replications B");
    cmd->add_option("--nu-grid", f.nu_grid, "inequality aversion values")->delimiter(',');
    cmd->add_option("--orders", f.orders, "dominance orders")->delimiter(',');
    cmd->add_option("--deflator", f.deflators, "cpi, wr or gni")->delimiter(',');
    cmd->add_option("--design", f.design, "vs-base or vs-all");
    cmd->add_option("--input", f.input, "prices or level-enhanced");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
}

hwd::RunConfig build_config(const Flags& f) {
    auto c = hwd::load_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (f.bootstrap) c.bootstrap = *f.bootstrap;
    if (!f.nu_grid.empty()) c.nu_grid = f.nu_grid;
    if (!f.orders.empty()) c.orders = f.orders;
    if (!f.deflators.empty()) {
        c.deflators.clear();
        for (const auto& d : f.deflators) {
            try {
                c.deflators.push_back(hwd::parse_deflator(d));
            } catch (const hwd::Error& e) {
                throw hwd::ConfigError(e.what());
            }
        }
    }
    if (f.design) c.design = hwd::parse_design(*f.design);
    if (f.input) c.input = hwd::parse_input(*f.input);
    if (f.out) c.out = *f.out;
    if (f.threads) c.threads = *f.threads;
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Housing-wealth welfare and stochastic-dominance inference"};
    app.require_subcommand(1);
    Flags flags;
    std::string simd;
    app.add_option("--simd", simd, "force kernel variant: scalar or avx2");

    struct Command {
        const char* name;
        const char* help;
        hwd::Json (hwd::Pipeline::*run)();
    };
    const Command commands[] = {
        {"ingest", "parse transactions and report row rejections", &hwd::Pipeline::ingest},
        {"weights", "post-stratification weights per round and type", &hwd::Pipeline::weights},
        {"welfare", "equivalent-wealth ratios and bootstrap tests", &hwd::Pipeline::welfare},
        {"sd", "stochastic-dominance tests", &hwd::Pipeline::sd},
        {"hedonic", "hedonic fits and level-enhanced residuals", &hwd::Pipeline::hedonic},
        {"residual-sd", "dominance tests on level-enhanced residuals", &hwd::Pipeline::residual_sd},
        {"report", "distribution summaries and density traces", &hwd::Pipeline::report},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        add_common(sub, flags);
        subs.emplace_back(sub, &c);
    }
    std::string spec_path;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "write a synthetic scenario in the input formats");
    synth->add_option("--config", spec_path, "scenario spec (JSON)")->required();
    synth->add_option("--out", synth_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (!simd.empty()) {
            try {
                hwd::kernels::set_isa(simd == "scalar" ? hwd::kernels::Isa::Scalar : hwd::kernels::Isa::Avx2);
            } catch (const std::invalid_argument& e) {
                throw hwd::ConfigError(e.what());
            }
        }
        if (synth->parsed()) {
            std::cout << hwd::run_synth(spec_path, synth_out).dump(2) << '\n';
            return 0;
        }
        for (const auto& [sub, cmd] : subs) {
            if (!sub->parsed()) continue;
            hwd::Pipeline pipeline(build_config(flags));
            const auto result = (pipeline.*(cmd->run))();
            std::cerr << cmd->name << ": wrote " << pipeline.config().out.string() << '\n';
            (void)result;
        }
        return 0;
    } catch (const hwd::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hwd::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
