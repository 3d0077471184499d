#include "latgm/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>

#include "latgm/dantzig.hpp"
#include "latgm/error.hpp"
#include "latgm/evaluate.hpp"
#include "latgm/io.hpp"
#include "latgm/kernels.hpp"
#include "latgm/linalg.hpp"
#include "latgm/plot.hpp"
#include "latgm/regression.hpp"
#include "latgm/rng.hpp"
#include "latgm/simulate.hpp"

namespace latgm::cli {

namespace fs = std::filesystem;

namespace {

using Pairs = std::vector<std::pair<std::string, std::string>>;

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& started, const Pairs& config) {
    Pairs kv{
        {"command", command},
        {"tool_version", kVersion},
        {"kernels", std::string(kernels::name(kernels::active().backend))},
        {"rng", CounterRng::kName},
        {"started", started},
        {"finished", utc_now()},
    };
    kv.insert(kv.end(), config.begin(), config.end());
    io::write_key_values(dir / "manifest.txt", kv);
}

NuclearWeight parse_mu(const std::string& text) { return NuclearWeight(io::parse_double(text)); }

// ---------------------------------------------------------------------------

struct SimulateArgs {
    GeneratorConfig gen;
    std::size_t n = 30;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const std::string started = utc_now();
    const Simulation sim = simulate(a.gen, a.n);
    fs::create_directories(a.out);
    const fs::path dir(a.out);
    write_ground_truth(dir, sim.truth);
    io::write_matrix_csv(dir / "X.csv", sim.x);
    io::write_matrix_csv(dir / "Sigma_hat.csv", empirical_covariance(sim.x));
    write_manifest(dir, "simulate", started,
                   {
                       {"p_full", std::to_string(a.gen.p_full)},
                       {"h", std::to_string(a.gen.h)},
                       {"n", std::to_string(a.n)},
                       {"edge_probability", io::format_double(a.gen.edge_probability)},
                       {"weight_low", io::format_double(a.gen.weight_low)},
                       {"weight_high", io::format_double(a.gen.weight_high)},
                       {"diag_boost", io::format_double(a.gen.diag_boost)},
                       {"seed", std::to_string(a.gen.seed)},
                   });
    out << "p=" << sim.truth.p() << " h=" << sim.truth.h() << " n=" << a.n
        << " true_edges=" << sim.truth.true_edges.size() << " rank_lstar=" << numeric_rank(sim.truth.lowrank_part)
        << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string estimator = "regression";
    std::string x_path;
    std::string sigma_path;
    double lambda = 0.0;
    std::string mu = "inf";
    std::string out;
    RegLrConfig reg;
    DantzigConfig dz;
};

int cmd_fit(FitArgs a, std::ostream& out) {
    const std::string started = utc_now();
    const NuclearWeight mu = parse_mu(a.mu);
    Pairs echo{{"estimator", a.estimator}, {"lambda", io::format_double(a.lambda)}, {"mu", format_mu(mu)}};

    if (a.estimator == "regression") {
        if (a.x_path.empty()) throw ConfigError("--x is required for the regression estimator");
        const DenseMatrix x = io::read_matrix_csv(a.x_path);
        a.reg.lambda = a.lambda;
        a.reg.mu = mu;
        const FitResult fit = fit_reg_lr(x, a.reg);
        fs::create_directories(a.out);
        write_fit_result(a.out, fit, a.reg);
        echo.emplace_back("x", a.x_path);
        write_manifest(a.out, "fit", started, echo);
        for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
        out << "objective=" << io::format_double(fit.objective_trace.back()) << " rank_xl=" << fit.rank_XL
            << " converged=" << (fit.converged ? "true" : "false") << '\n';
        return kOk;
    }

    std::optional<DenseMatrix> x;
    if (!a.x_path.empty()) x.emplace(io::read_matrix_csv(a.x_path));
    DenseMatrix sigma_hat = [&] {
        if (!a.sigma_path.empty()) return io::read_matrix_csv(a.sigma_path);
        if (x) return empirical_covariance(*x);
        throw ConfigError("--sigma (or --x) is required for the dantzig estimator");
    }();
    if (!sigma_hat.is_square()) throw DimensionError("Sigma_hat must be square");
    if (x && x->cols() != sigma_hat.rows()) throw DimensionError("X and Sigma_hat disagree on p");
    a.dz.lambda = a.lambda;
    a.dz.mu = mu;
    const DantzigResult fit = fit_dantzig(sigma_hat, a.dz);
    const std::size_t rank = mu.is_infinite() ? 0 : x ? numeric_rank(matmul(*x, fit.L_hat)) : numeric_rank(fit.L_hat);
    fs::create_directories(a.out);
    write_dantzig_result(a.out, fit, a.dz);
    if (!a.sigma_path.empty()) echo.emplace_back("sigma", a.sigma_path);
    if (x) echo.emplace_back("x", a.x_path);
    echo.emplace_back("rank_xl", std::to_string(rank));
    write_manifest(a.out, "fit", started, echo);
    out << "objective=" << io::format_double(fit.primal_objective) << " rank_xl=" << rank
        << " converged=" << (fit.converged ? "true" : "false") << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
    std::string config;
    std::string out;
    unsigned jobs = 1;
    io::KeyValues overrides;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
    const std::string started = utc_now();
    io::KeyValues kv;
    if (!a.config.empty()) kv = io::read_key_values(a.config);
    for (const auto& [k, v] : a.overrides) kv[k] = v;
    const ExperimentConfig cfg = ExperimentConfig::from_key_values(kv);

    const ExperimentOutput result = run_experiment(cfg, a.jobs);
    const auto aggs = aggregate(result.records);
    const double h = static_cast<double>(cfg.generator.h);

    fs::create_directories(a.out);
    const fs::path dir(a.out);
    io::write_text(dir / "records.csv", records_to_csv(result.records, cfg.record_timing));
    io::write_text(dir / "timings.csv", timings_to_csv(result.records));
    io::write_text(dir / "aggregates.csv", aggregates_to_csv(aggs));
    io::write_text(dir / "comparison.csv", comparison_to_csv(curve_comparison(aggs, h, cfg.rank_tol)));
    std::string notices;
    for (const auto& n : result.notices) {
        notices += n + '\n';
        err << "notice: " << n << '\n';
    }
    io::write_text(dir / "notices.txt", notices);
    write_manifest(dir, "experiment", started, cfg.to_key_values());

    std::size_t matched = 0;
    for (const auto& m : select_rank_matched(aggs, h, cfg.rank_tol)) matched += m.mu.is_infinite() ? 0 : 1;
    out << "records=" << result.records.size() << " cells=" << aggs.size() << " skipped=" << result.notices.size()
        << " rank_matched=" << matched << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------

struct PlotArgs {
    std::string aggregates;
    std::string out;
    double h = 3;
    double tol = 0.5;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
    std::string text;
    try {
        text = io::read_text(a.aggregates);
    } catch (const ConfigError& e) {
        throw DimensionError(e.what());
    }
    const auto aggs = aggregates_from_csv(text);
    if (!(a.tol > 0.0)) throw ConfigError("--tol must be positive");
    fs::create_directories(a.out);
    plot::write_panels(a.out, aggs, a.h, a.tol);
    out << "wrote " << plot::kRankPanel << ' ' << plot::kPowerFdrPanel << ' ' << plot::kRankMatchedPanel << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparse-plus-low-rank precision matrix estimation toolkit", "latgm"};
    app.set_version_flag("--version", kVersion);
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Generate a latent Gaussian graphical model and draw a sample");
    s->set_help_flag("--help", "Print this help message and exit");
    s->add_option("--p-full", sim.gen.p_full, "Total number of variables")->capture_default_str();
    s->add_option("--h", sim.gen.h, "Number of hidden variables")->capture_default_str();
    s->add_option("--n", sim.n, "Sample size")->capture_default_str();
    s->add_option("--edge-prob", sim.gen.edge_probability, "Edge probability")->capture_default_str();
    s->add_option("--weight-low", sim.gen.weight_low)->capture_default_str();
    s->add_option("--weight-high", sim.gen.weight_high)->capture_default_str();
    s->add_option("--diag-boost", sim.gen.diag_boost)->capture_default_str();
    s->add_option("--seed", sim.gen.seed, "Seed")->capture_default_str();
    s->add_option("--out", sim.out, "Output directory")->required();

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit the regression or Dantzig-type estimator");
    f->set_help_flag("--help", "Print this help message and exit");
    f->add_option("--estimator", fit.estimator)->check(CLI::IsMember({"regression", "dantzig"}))->capture_default_str();
    f->add_option("--x", fit.x_path, "Data matrix CSV (n x p)");
    f->add_option("--sigma", fit.sigma_path, "Empirical covariance CSV (p x p)");
    f->add_option("--lambda", fit.lambda)->required();
    f->add_option("--mu", fit.mu, "Nuclear weight; 'inf' disables the low-rank part")->required();
    f->add_option("--out", fit.out)->required();
    f->add_option("--outer-max", fit.reg.outer_max)->capture_default_str();
    f->add_option("--outer-rel-tol", fit.reg.outer_rel_tol)->capture_default_str();
    f->add_option("--cd-max-passes", fit.reg.cd_max_passes)->capture_default_str();
    f->add_option("--cd-tol", fit.reg.cd_tol)->capture_default_str();
    f->add_option("--max-iters", fit.dz.max_iters)->capture_default_str();
    f->add_option("--kkt-tol", fit.dz.kkt_tol)->capture_default_str();
    f->add_option("--step-safety", fit.dz.step_safety)->capture_default_str();

    ExperimentArgs exp;
    auto* e = app.add_subcommand("experiment", "Run the simulation grid and summarise power, FDR and rank");
    e->set_help_flag("--help", "Print this help message and exit");
    e->add_option("--config", exp.config, "key=value configuration (a manifest.txt also works)");
    e->add_option("--out", exp.out)->required();
    e->add_option("--jobs", exp.jobs, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
    const std::vector<std::pair<std::string, std::string>> inline_keys{
        {"--p-full", "p_full"},       {"--h", "h"},
        {"--n", "n"},                 {"--edge-prob", "edge_probability"},
        {"--replicates", "replicates"}, {"--seed", "master_seed"},
        {"--estimator", "estimator"}, {"--lambdas", "lambdas"},
        {"--mus", "mus"},             {"--grid-scale", "grid_scale"},
        {"--record-timing", "record_timing"},
    };
    std::vector<std::string> inline_values(inline_keys.size());
    std::vector<CLI::Option*> inline_opts;
    for (std::size_t i = 0; i < inline_keys.size(); ++i) {
        inline_opts.push_back(e->add_option(inline_keys[i].first, inline_values[i], "Overrides " + inline_keys[i].second));
    }

    PlotArgs pl;
    auto* p = app.add_subcommand("plot", "Render the three summary panels as SVG");
    p->set_help_flag("--help", "Print this help message and exit");
    p->add_option("--aggregates", pl.aggregates)->required();
    p->add_option("--out", pl.out)->required();
    p->add_option("--h", pl.h)->required();
    p->add_option("--tol", pl.tol)->capture_default_str();

    std::vector<std::string> argv_storage{"latgm"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << '\n';
        return kUsage;
    }

    try {
        if (*s) return cmd_simulate(sim, out);
        if (*f) return cmd_fit(fit, out);
        if (*e) {
            for (std::size_t i = 0; i < inline_keys.size(); ++i) {
                if (inline_opts[i]->count()) exp.overrides[inline_keys[i].second] = inline_values[i];
            }
            return cmd_experiment(exp, out, err);
        }
        if (*p) return cmd_plot(pl, out);
    } catch (const InfeasibleHidingError& ex) {
        err << "error: " << ex.what() << '\n';
        return kInfeasible;
    } catch (const ConfigError& ex) {
        err << "error: " << ex.what() << '\n';
        return kUsage;
    } catch (const DimensionError& ex) {
        err << "error: " << ex.what() << '\n';
        return kDataError;
    } catch (const ContractError& ex) {
        err << "error: " << ex.what() << '\n';
        return kSoftware;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kSoftware;
    }
    return kUsage;
}

}  // namespace latgm::cli
