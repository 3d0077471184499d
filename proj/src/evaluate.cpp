#include "latgm/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "latgm/dantzig.hpp"
#include "latgm/error.hpp"
#include "latgm/linalg.hpp"
#include "latgm/rng.hpp"

namespace latgm {

SupportEstimate support_offdiag(const DenseMatrix& s_hat, double threshold, SupportRule rule) {
    if (!s_hat.is_square()) throw DimensionError("support_offdiag: matrix is not square");
    if (!(threshold >= 0.0)) throw ContractError("support_offdiag: threshold must be nonnegative");
    SupportEstimate est{{}, threshold, rule};
    for (std::size_t i = 0; i < s_hat.rows(); ++i) {
        for (std::size_t j = i + 1; j < s_hat.cols(); ++j) {
            const bool a = std::fabs(s_hat(i, j)) > threshold;
            const bool b = std::fabs(s_hat(j, i)) > threshold;
            if (rule == SupportRule::or_rule ? (a || b) : (a && b)) est.edges.emplace(i, j);
        }
    }
    return est;
}

PowerFdr power_fdr(const SupportEstimate& estimate, const EdgeSet& truth) {
    if (truth.empty()) throw UndefinedPowerError("power is undefined for an empty true edge set");
    std::size_t hits = 0;
    for (const auto& e : estimate.edges) hits += truth.count(e);
    const std::size_t false_hits = estimate.edges.size() - hits;
    PowerFdr out;
    out.power = static_cast<double>(hits) / static_cast<double>(truth.size());
    out.fdr = estimate.edges.empty() ? 0.0 : static_cast<double>(false_hits) / static_cast<double>(estimate.edges.size());
    return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {hi};
    std::vector<double> g(count);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t k = 0; k < count; ++k) {
        g[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::string format_mu(NuclearWeight mu) { return io::format_double(mu.value()); }

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig c;
    c.lambdas = log_grid(0.01, 1.0, 20);
    for (double m : log_grid(0.05, 1.0, 5)) c.mus.emplace_back(m);
    c.mus.push_back(NuclearWeight::infinite());
    return c;
}

void ExperimentConfig::validate() const {
    try {
        generator.validate();
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    if (n < 1) throw ConfigError("n must be positive");
    if (lambdas.empty() || mus.empty()) throw ConfigError("lambda and mu grids must be non-empty");
    if (replicates < 1) throw ConfigError("replicates must be at least 1");
    for (double l : lambdas) {
        if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("lambda values must be positive and finite");
    }
    if (!std::is_sorted(lambdas.begin(), lambdas.end()) ||
        std::adjacent_find(lambdas.begin(), lambdas.end()) != lambdas.end()) {
        throw ConfigError("lambda values must be strictly increasing");
    }
    for (auto m : mus) {
        if (!(m.value() > 0.0)) throw ConfigError("mu values must be positive or inf");
    }
    if (!std::is_sorted(mus.begin(), mus.end()) || std::adjacent_find(mus.begin(), mus.end()) != mus.end()) {
        throw ConfigError("mu values must be strictly increasing");
    }
    if (!(rank_tol > 0.0)) throw ConfigError("rank_tol must be positive");
    if (!(support_threshold >= 0.0)) throw ConfigError("support_threshold must be nonnegative");
}

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "," : "") + parts[i];
    return s;
}

template <class T>
T parse_integer(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
        return static_cast<T>(v);
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("bad boolean for " + key + ": '" + value + "'");
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        return io::parse_double(value);
    } catch (const ConfigError&) {
        throw ConfigError("bad number for " + key + ": '" + value + "'");
    }
}

const std::set<std::string>& bookkeeping_keys() {
    static const std::set<std::string> keys{"command", "tool_version", "started", "finished", "kernels", "rng", "jobs"};
    return keys;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_key_values(const io::KeyValues& kv) {
    ExperimentConfig c = defaults();
    for (const auto& [key, value] : kv) {
        if (key == "p_full") c.generator.p_full = parse_integer<std::size_t>(key, value);
        else if (key == "h") c.generator.h = parse_integer<std::size_t>(key, value);
        else if (key == "edge_probability") c.generator.edge_probability = parse_real(key, value);
        else if (key == "weight_low") c.generator.weight_low = parse_real(key, value);
        else if (key == "weight_high") c.generator.weight_high = parse_real(key, value);
        else if (key == "diag_boost") c.generator.diag_boost = parse_real(key, value);
        else if (key == "n") c.n = parse_integer<std::size_t>(key, value);
        else if (key == "replicates") c.replicates = parse_integer<std::size_t>(key, value);
        else if (key == "master_seed") c.master_seed = parse_integer<std::uint64_t>(key, value);
        else if (key == "lambdas") {
            c.lambdas.clear();
            for (const auto& f : io::split(value, ',')) c.lambdas.push_back(parse_real(key, f));
        } else if (key == "mus") {
            c.mus.clear();
            for (const auto& f : io::split(value, ',')) c.mus.emplace_back(parse_real(key, f));
        } else if (key == "estimator") {
            if (value == "regression") c.estimator = Estimator::regression;
            else if (value == "dantzig") c.estimator = Estimator::dantzig;
            else throw ConfigError("estimator must be regression or dantzig");
        } else if (key == "grid_scale") {
            if (value == "relative") c.grid_scale = GridScale::relative;
            else if (value == "absolute") c.grid_scale = GridScale::absolute;
            else throw ConfigError("grid_scale must be relative or absolute");
        } else if (key == "outer_max") c.outer_max = parse_integer<int>(key, value);
        else if (key == "outer_rel_tol") c.outer_rel_tol = parse_real(key, value);
        else if (key == "cd_max_passes") c.cd_max_passes = parse_integer<int>(key, value);
        else if (key == "cd_tol") c.cd_tol = parse_real(key, value);
        else if (key == "dantzig_max_iters") c.dantzig_max_iters = parse_integer<int>(key, value);
        else if (key == "dantzig_kkt_tol") c.dantzig_kkt_tol = parse_real(key, value);
        else if (key == "dantzig_step_safety") c.dantzig_step_safety = parse_real(key, value);
        else if (key == "support_threshold") c.support_threshold = parse_real(key, value);
        else if (key == "support_rule") {
            if (value == "or") c.support_rule = SupportRule::or_rule;
            else if (value == "and") c.support_rule = SupportRule::and_rule;
            else throw ConfigError("support_rule must be or/and");
        } else if (key == "rank_tol") c.rank_tol = parse_real(key, value);
        else if (key == "record_timing") c.record_timing = parse_bool(key, value);
        else if (!bookkeeping_keys().count(key)) throw ConfigError("unknown configuration key '" + key + "'");
    }
    c.validate();
    return c;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_key_values() const {
    std::vector<std::string> ls;
    for (double l : lambdas) ls.push_back(io::format_double(l));
    std::vector<std::string> ms;
    for (auto m : mus) ms.push_back(format_mu(m));
    return {
        {"p_full", std::to_string(generator.p_full)},
        {"h", std::to_string(generator.h)},
        {"edge_probability", io::format_double(generator.edge_probability)},
        {"weight_low", io::format_double(generator.weight_low)},
        {"weight_high", io::format_double(generator.weight_high)},
        {"diag_boost", io::format_double(generator.diag_boost)},
        {"n", std::to_string(n)},
        {"replicates", std::to_string(replicates)},
        {"master_seed", std::to_string(master_seed)},
        {"estimator", estimator == Estimator::regression ? "regression" : "dantzig"},
        {"grid_scale", grid_scale == GridScale::relative ? "relative" : "absolute"},
        {"lambdas", join(ls)},
        {"mus", join(ms)},
        {"outer_max", std::to_string(outer_max)},
        {"outer_rel_tol", io::format_double(outer_rel_tol)},
        {"cd_max_passes", std::to_string(cd_max_passes)},
        {"cd_tol", io::format_double(cd_tol)},
        {"dantzig_max_iters", std::to_string(dantzig_max_iters)},
        {"dantzig_kkt_tol", io::format_double(dantzig_kkt_tol)},
        {"dantzig_step_safety", io::format_double(dantzig_step_safety)},
        {"support_threshold", io::format_double(support_threshold)},
        {"support_rule", support_rule == SupportRule::or_rule ? "or" : "and"},
        {"rank_tol", io::format_double(rank_tol)},
        {"record_timing", record_timing ? "true" : "false"},
    };
}

// ---------------------------------------------------------------------------
// Experiment

namespace {

struct ReplicateOutcome {
    std::vector<ExperimentRecord> records;
    std::optional<std::string> notice;
};

ReplicateOutcome run_replicate(const ExperimentConfig& cfg, std::size_t r) {
    using clock = std::chrono::steady_clock;
    ReplicateOutcome out;
    GeneratorConfig gen = cfg.generator;
    gen.seed = derive_seed(cfg.master_seed, r);

    std::optional<Simulation> sim;
    try {
        sim.emplace(simulate(gen, cfg.n));
    } catch (const InfeasibleHidingError& e) {
        out.notice = "replicate " + std::to_string(r) + " skipped: " + e.what();
        return out;
    }
    if (sim->truth.true_edges.empty()) {
        out.notice = "replicate " + std::to_string(r) + " skipped: no true edges among observed variables";
        return out;
    }
    const DenseMatrix& x = sim->x;

    double lambda_scale = 1.0;
    double mu_scale = 1.0;
    std::optional<DenseMatrix> sigma_hat;
    RegLrConfig reg_base;
    reg_base.outer_max = cfg.outer_max;
    reg_base.outer_rel_tol = cfg.outer_rel_tol;
    reg_base.cd_max_passes = cfg.cd_max_passes;
    reg_base.cd_tol = cfg.cd_tol;

    try {
        if (cfg.estimator == Estimator::regression) {
            if (cfg.grid_scale == GridScale::relative) {
                lambda_scale = lambda_max(x);
                std::vector<double> abs_lambdas;
                for (double lam : cfg.lambdas) abs_lambdas.push_back(lam * lambda_scale);
                mu_scale = latgm::mu_scale(x, abs_lambdas, reg_base);
            }
        } else {
            sigma_hat.emplace(empirical_covariance(x));
        }

        for (double lam : cfg.lambdas) {
            for (NuclearWeight mu : cfg.mus) {
                const auto start = clock::now();
                ExperimentRecord rec;
                rec.replicate = r;
                rec.lambda = lam;
                rec.mu = mu;
                const NuclearWeight mu_abs = mu.is_infinite() ? mu : NuclearWeight(mu.value() * mu_scale);
                DenseMatrix s_hat(x.cols(), x.cols());
                if (cfg.estimator == Estimator::regression) {
                    RegLrConfig rc = reg_base;
                    rc.lambda = lam * lambda_scale;
                    rc.mu = mu_abs;
                    FitResult fit = fit_reg_lr(x, rc);
                    rec.rank_XL = fit.rank_XL;
                    rec.converged = fit.converged;
                    s_hat = std::move(fit.S_hat);
                } else {
                    DantzigConfig dc;
                    dc.lambda = lam * lambda_scale;
                    dc.mu = mu_abs;
                    dc.max_iters = cfg.dantzig_max_iters;
                    dc.kkt_tol = cfg.dantzig_kkt_tol;
                    dc.step_safety = cfg.dantzig_step_safety;
                    DantzigResult fit = fit_dantzig(*sigma_hat, dc);
                    rec.rank_XL = mu.is_infinite() ? 0 : numeric_rank(matmul(x, fit.L_hat));
                    rec.converged = fit.converged;
                    s_hat = std::move(fit.S_hat);
                }
                const auto pf = power_fdr(support_offdiag(s_hat, cfg.support_threshold, cfg.support_rule),
                                          sim->truth.true_edges);
                rec.power = pf.power;
                rec.fdr = pf.fdr;
                rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
                out.records.push_back(rec);
            }
        }
    } catch (const Error& e) {
        out.records.clear();
        out.notice = "replicate " + std::to_string(r) + " skipped: " + e.what();
    }
    return out;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg, unsigned jobs) {
    cfg.validate();
    const std::size_t reps = cfg.replicates;
    std::vector<ReplicateOutcome> outcomes(reps);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        while (true) {
            const std::size_t r = next.fetch_add(1);
            if (r >= reps) return;
            try {
                outcomes[r] = run_replicate(cfg, r);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(reps);
            }
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(reps)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentOutput out;
    for (auto& o : outcomes) {
        out.records.insert(out.records.end(), o.records.begin(), o.records.end());
        if (o.notice) out.notices.push_back(*o.notice);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Summaries

std::vector<Aggregate> aggregate(const std::vector<ExperimentRecord>& records) {
    std::map<std::pair<double, NuclearWeight>, Aggregate> groups;
    for (const auto& r : records) {
        auto& g = groups[{r.lambda, r.mu}];
        g.lambda = r.lambda;
        g.mu = r.mu;
        g.power += r.power;
        g.fdr += r.fdr;
        g.rank_XL += static_cast<double>(r.rank_XL);
        ++g.count;
    }
    std::vector<Aggregate> out;
    out.reserve(groups.size());
    for (auto& [key, g] : groups) {
        const double c = static_cast<double>(g.count);
        g.power /= c;
        g.fdr /= c;
        g.rank_XL /= c;
        out.push_back(g);
    }
    return out;
}

std::vector<Aggregate> select_rank_matched(const std::vector<Aggregate>& aggregates, double h, double tol) {
    if (!(tol > 0.0)) throw ContractError("select_rank_matched: tol must be positive");
    std::vector<Aggregate> out;
    for (const auto& a : aggregates) {
        if (a.rank_XL >= h - tol && a.rank_XL <= h + tol) out.push_back(a);
    }
    return out;
}

std::vector<ComparisonRow> curve_comparison(const std::vector<Aggregate>& aggregates, double h, double tol) {
    constexpr int kBins = 10;
    std::vector<ComparisonRow> rows(kBins);
    for (int b = 0; b < kBins; ++b) {
        rows[b].bin_low = b / 20.0;
        rows[b].bin_high = (b + 1) / 20.0;
    }
    auto bin_of = [&](double fdr) -> std::optional<int> {
        if (fdr < 0.0 || fdr > 0.5) return std::nullopt;
        return std::min(kBins - 1, static_cast<int>(std::floor(fdr * 20.0)));
    };
    auto offer = [](std::optional<double>& slot, double v) { slot = slot ? std::max(*slot, v) : v; };

    for (const auto& a : aggregates) {
        const auto b = bin_of(a.fdr);
        if (!b) continue;
        if (a.mu.is_infinite()) {
            offer(rows[*b].baseline_power, a.power);
        } else if (a.rank_XL >= h - tol && a.rank_XL <= h + tol) {
            offer(rows[*b].rank_matched_power, a.power);
        }
    }
    for (auto& r : rows) {
        if (r.rank_matched_power && r.baseline_power) r.difference = *r.rank_matched_power - *r.baseline_power;
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV

std::string records_to_csv(const std::vector<ExperimentRecord>& records, bool with_timing) {
    std::string s = "replicate,lambda,mu,power,fdr,rank_xl,seconds,converged\n";
    for (const auto& r : records) {
        s += std::to_string(r.replicate) + ',' + io::format_double(r.lambda) + ',' + format_mu(r.mu) + ',' +
             io::format_double(r.power) + ',' + io::format_double(r.fdr) + ',' + std::to_string(r.rank_XL) + ',' +
             io::format_double(with_timing ? r.seconds : 0.0) + ',' + (r.converged ? "true" : "false") + '\n';
    }
    return s;
}

std::string timings_to_csv(const std::vector<ExperimentRecord>& records) {
    std::string s = "replicate,lambda,mu,seconds\n";
    for (const auto& r : records) {
        s += std::to_string(r.replicate) + ',' + io::format_double(r.lambda) + ',' + format_mu(r.mu) + ',' +
             io::format_double(r.seconds) + '\n';
    }
    return s;
}

std::string aggregates_to_csv(const std::vector<Aggregate>& aggregates) {
    std::string s = "lambda,mu,power,fdr,rank_xl,count\n";
    for (const auto& a : aggregates) {
        s += io::format_double(a.lambda) + ',' + format_mu(a.mu) + ',' + io::format_double(a.power) + ',' +
             io::format_double(a.fdr) + ',' + io::format_double(a.rank_XL) + ',' + std::to_string(a.count) + '\n';
    }
    return s;
}

std::vector<Aggregate> aggregates_from_csv(std::string_view text) {
    std::vector<std::string> lines;
    for (auto& l : io::split(text, '\n')) {
        if (!l.empty()) lines.push_back(l);
    }
    if (lines.empty()) throw DimensionError("aggregates CSV is empty");
    const auto header = io::split(lines.front(), ',');
    auto column = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DimensionError("aggregates CSV lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_lambda = column("lambda");
    const std::size_t c_mu = column("mu");
    const std::size_t c_power = column("power");
    const std::size_t c_fdr = column("fdr");
    const std::size_t c_rank = column("rank_xl");
    const auto c_count = std::find(header.begin(), header.end(), "count");

    std::vector<Aggregate> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = io::split(lines[i], ',');
        if (f.size() != header.size()) throw DimensionError("aggregates CSV row " + std::to_string(i) + " is ragged");
        try {
            Aggregate a;
            a.lambda = io::parse_double(f[c_lambda]);
            a.mu = NuclearWeight(io::parse_double(f[c_mu]));
            a.power = io::parse_double(f[c_power]);
            a.fdr = io::parse_double(f[c_fdr]);
            a.rank_XL = io::parse_double(f[c_rank]);
            a.count = c_count == header.end()
                          ? 1
                          : static_cast<std::size_t>(io::parse_double(f[static_cast<std::size_t>(c_count - header.begin())]));
            out.push_back(a);
        } catch (const ConfigError& e) {
            throw DimensionError("aggregates CSV row " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
    auto cell = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string("NA"); };
    std::string s = "fdr_bin_low,fdr_bin_high,rank_matched_power,baseline_power,difference\n";
    for (const auto& r : rows) {
        s += io::format_double(r.bin_low) + ',' + io::format_double(r.bin_high) + ',' + cell(r.rank_matched_power) +
             ',' + cell(r.baseline_power) + ',' + cell(r.difference) + '\n';
    }
    return s;
}

}  // namespace latgm
