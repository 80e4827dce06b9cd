#include "qtorus/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>

#include <boost/version.hpp>
#include <json.hpp>

#include "qtorus/degeneracy.hpp"
#include "qtorus/equidist.hpp"
#include "qtorus/errors.hpp"
#include "qtorus/paircorr.hpp"
#include "qtorus/spectrum.hpp"
#include "qtorus/theta.hpp"

namespace qtorus {

namespace fs = std::filesystem;
using nlohmann::json;

std::filesystem::path resolve_output_dir(const RunConfig& cfg) {
    const std::string& d = cfg.get_string("output_dir");
    if (!d.empty()) return d;
    if (const char* env = std::getenv("QTORUS_OUT"); env && *env) return env;
    return "qtorus-out";
}

namespace {

struct Table {
    Table(std::string n, std::string u, std::string h) : name(std::move(n)), units(std::move(u)), header(std::move(h)) {}
    std::string name;
    std::string units;
    std::string header;
    std::vector<std::string> rows;
    // gnuplot: 1-based columns; 0 disables
    int px = 0, py = 0, plim = 0;
    bool logx = false, logy = false;
    std::string xlabel, ylabel;
};

struct Context {
    const RunConfig& cfg;
    std::string hash;
    fs::path dir;
    Parallelism par;
    RunOutcome out;
    bool check_failed = false;
};

std::string short_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", x);
    std::string s(buf);
    // 1e-06 -> 1e-6
    auto e = s.find("e-0");
    if (e != std::string::npos) s.erase(e + 2, 1);
    e = s.find("e+0");
    if (e != std::string::npos) s.erase(e + 2, 1);
    return s;
}

void write_file(Context& ctx, const std::string& name, const std::string& content) {
    const fs::path p = ctx.dir / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << content;
    ctx.out.files.push_back(p);
}

void write_table(Context& ctx, const Table& t) {
    std::string text = "# qtorus " + ctx.cfg.get_string("subcommand") + " table=" + t.name + " manifest=" + ctx.hash +
                       " units: " + t.units + "\n";
    text += t.header + "\n";
    for (const auto& r : t.rows) text += r + "\n";
    write_file(ctx, t.name + ".csv", text);
    if (t.px == 0 || t.py == 0) return;
    std::string gp = "# qtorus table=" + t.name + " manifest=" + ctx.hash + "\n";
    gp += "set datafile separator ','\nset key autotitle columnhead\n";
    gp += "set terminal pngcairo size 900,600\nset output '" + t.name + ".png'\n";
    gp += "set xlabel '" + t.xlabel + "'\nset ylabel '" + t.ylabel + "'\n";
    if (t.logx) gp += "set logscale x\n";
    if (t.logy) gp += "set logscale y\n";
    gp += "plot '" + t.name + ".csv' using " + std::to_string(t.px) + ":" + std::to_string(t.py) + " with linespoints";
    if (t.plim) gp += ", '' using " + std::to_string(t.px) + ":" + std::to_string(t.plim) + " with lines";
    gp += "\n";
    write_file(ctx, t.name + ".gp", gp);
}

int k_of(const RunConfig& cfg) {
    const auto k = cfg.get_int("k");
    if (k < 2 || k > 16) throw InvalidArgument("k must lie in [2, 16]");
    return static_cast<int>(k);
}

PreciseVector alpha_of(const RunConfig& cfg) { return parse_alpha(cfg.get_string("alpha"), k_of(cfg)); }

WeightH h_of(const RunConfig& cfg) {
    return WeightH(cfg.get_real("h_width"), parse_hshape(cfg.get_string("h_shape")), cfg.get_real("h_amp"));
}

SpectrumSlice restrict_slice(const SpectrumSlice& s, double cutoff) {
    SpectrumSlice out{s.spec, cutoff, {}, {}, std::nullopt, s.key_denominator};
    const auto n = static_cast<std::size_t>(std::upper_bound(s.lambdas.begin(), s.lambdas.end(), cutoff) -
                                            s.lambdas.begin());
    out.lambdas.assign(s.lambdas.begin(), s.lambdas.begin() + n);
    out.rescaled.assign(s.rescaled.begin(), s.rescaled.begin() + n);
    if (s.exact_keys) out.exact_keys.emplace(s.exact_keys->begin(), s.exact_keys->begin() + n);
    return out;
}

SpectrumSlice get_slice(Context& ctx, const TorusSpec& spec, double cutoff) {
    SpectrumOptions so;
    so.memory_budget = static_cast<std::size_t>(ctx.cfg.get_int("memory_budget"));
    so.par = ctx.par;
    const std::string& cache = ctx.cfg.get_string("spectrum_cache");
    if (cache.empty()) return enumerate_spectrum(spec, cutoff, so);
    if (fs::exists(cache)) {
        try {
            SpectrumSlice cached = read_spectrum_cache(cache);
            if (cached.spec.digest() == spec.digest() &&
                cached.spec.exact_components() == spec.exact_components() && cached.cutoff >= cutoff)
                return restrict_slice(cached, cutoff);
        } catch (const Error&) {
            // unreadable or stale cache: recompute below
        }
    }
    SpectrumSlice s = enumerate_spectrum(spec, cutoff, so);
    write_spectrum_cache(s, cache);
    return s;
}

// Cutoff whose rescaled value covers X_max.
double cutoff_for_rescaled(double X_max, int k) {
    double c = std::pow(X_max, 2.0 / k);
    while (rescale(c, k) < X_max) c = std::nextafter(c, INFINITY) * (1.0 + 1e-15);
    return c;
}

// ---- subcommands --------------------------------------------------------------------

void cmd_spectrum(Context& ctx) {
    const int k = k_of(ctx.cfg);
    const TorusSpec spec = to_spec(alpha_of(ctx.cfg));
    const double L = ctx.cfg.get_real("Lambda");
    const SpectrumSlice s = get_slice(ctx, spec, L);
    Table sum{"spectrum_summary", "lambda = |m - alpha|^2 (dimensionless)", "k,alpha_digest,Lambda,count,predicted"};
    sum.rows.push_back(std::to_string(k) + "," + spec.digest() + "," + format_real(L) + "," +
                       std::to_string(s.size()) + "," + format_real(predicted_count(k, L)));
    write_table(ctx, sum);
    if (ctx.cfg.get_bool("dump")) {
        Table t{"spectrum", "lambda = |m - alpha|^2, X = lambda^(k/2)", "index,lambda,X"};
        t.px = 2;
        t.py = 1;
        t.xlabel = "lambda";
        t.ylabel = "N(lambda)";
        for (std::size_t i = 0; i < s.size(); ++i)
            t.rows.push_back(std::to_string(i) + "," + format_real(s.lambdas[i]) + "," + format_real(s.rescaled[i]));
        write_table(ctx, t);
    }
    ctx.out.report.push_back(std::to_string(s.size()) + " eigenvalues <= " + short_real(L));
}

void cmd_paircorr(Context& ctx) {
    const int k = k_of(ctx.cfg);
    const TorusSpec spec = to_spec(alpha_of(ctx.cfg));
    Table t{"paircorr", "X and lambda dimensionless; value is R2", corr_csv_header()};
    t.px = 4;
    t.py = 6;
    t.plim = 7;
    t.logx = true;
    t.xlabel = "X or lambda";
    t.ylabel = "R2";
    const std::string mode = ctx.cfg.get_string("paircorr_mode");
    if (mode == "windowed") {
        const auto& w = ctx.cfg.get_reals("window");
        if (w.size() != 2) throw InvalidArgument("window needs two values a,b");
        const auto& Xs = ctx.cfg.get_reals("X");
        if (Xs.empty()) throw InvalidArgument("X list is empty");
        const double X_max = *std::max_element(Xs.begin(), Xs.end());
        const SpectrumSlice s = get_slice(ctx, spec, cutoff_for_rescaled(2.0 * X_max, k));
        for (double X : Xs) {
            const CorrEstimate e = r2_windowed(s, X, Window(w[0], w[1]), ctx.par);
            t.rows.push_back(corr_csv_row(e));
            ctx.out.report.push_back("X=" + short_real(X) + " R2=" + format_real(e.value) +
                                     " limit=" + format_real(e.theoretical_limit));
        }
    } else if (mode == "smoothed") {
        const TestPsi p1 = parse_psi(ctx.cfg.get_string("psi1")), p2 = parse_psi(ctx.cfg.get_string("psi2"));
        const WeightH h = h_of(ctx.cfg);
        SmoothedOptions so;
        so.hat_tol = ctx.cfg.get_real("hat_tol");
        so.tail_tol = ctx.cfg.get_real("tail_tol");
        so.par = ctx.par;
        for (double lam : ctx.cfg.get_reals("lambda")) {
            const SpectrumSlice s = get_slice(ctx, spec, required_cutoff(p1, p2, lam, k, so.tail_tol));
            const CorrEstimate e = r2_smoothed_direct(s, p1, p2, h, lam, so);
            t.rows.push_back(corr_csv_row(e));
            ctx.out.report.push_back("lambda=" + short_real(lam) + " R2=" + format_real(e.value) +
                                     " limit=" + format_real(e.theoretical_limit));
        }
    } else {
        throw InvalidArgument("paircorr_mode must be windowed or smoothed");
    }
    write_table(ctx, t);
}

ThetaIntegralOptions theta_options(const Context& ctx) {
    ThetaIntegralOptions o;
    o.tol = ctx.cfg.get_real("theta_tol");
    o.max_panel_width = ctx.cfg.get_real("max_panel_width");
    o.panel_budget = static_cast<std::size_t>(ctx.cfg.get_int("panel_budget"));
    o.richardson = ctx.cfg.get_bool("richardson");
    o.memory_budget = static_cast<std::size_t>(ctx.cfg.get_int("memory_budget"));
    o.par = ctx.par;
    return o;
}

void cmd_theta_check(Context& ctx) {
    const int k = k_of(ctx.cfg);
    const TorusSpec spec = to_spec(alpha_of(ctx.cfg));
    const TestPsi p1 = parse_psi(ctx.cfg.get_string("psi1")), p2 = parse_psi(ctx.cfg.get_string("psi2"));
    const WeightH h = h_of(ctx.cfg);
    SmoothedOptions so;
    so.hat_tol = ctx.cfg.get_real("hat_tol");
    so.tail_tol = ctx.cfg.get_real("tail_tol");
    so.par = ctx.par;
    const ThetaIntegralOptions to = theta_options(ctx);
    const double tol = ctx.cfg.get_real("theta_check_tol");
    Table t{"theta_check", "lambda dimensionless; values are smoothed R2",
            "lambda,direct,theta_integral,abs_diff,theta_error_estimate,direct_error_budget"};
    t.px = 1;
    t.py = 4;
    t.logy = true;
    t.xlabel = "lambda";
    t.ylabel = "|direct - theta|";
    double worst = 0.0;
    for (double lam : ctx.cfg.get_reals("lambda")) {
        const double cut = std::max(required_cutoff(p1, p2, lam, k, so.tail_tol), theta_cutoff(p1, p2, 1.0 / lam, to.tol));
        const SpectrumSlice s = get_slice(ctx, spec, cut);
        const CorrEstimate d = r2_smoothed_direct(s, p1, p2, h, lam, so);
        const ThetaIntegralResult th = r2_theta_integral(s, p1, p2, h, lam, to);
        const double diff = std::fabs(d.value - th.value);
        worst = std::max(worst, diff);
        t.rows.push_back(format_real(lam) + "," + format_real(d.value) + "," + format_real(th.value) + "," +
                         format_real(diff) + "," + format_real(th.error_estimate) + "," + format_real(d.error_budget));
    }
    write_table(ctx, t);
    if (worst < tol) {
        ctx.out.report.push_back("direct vs theta-integral max |Δ| < " + short_real(tol) + " (max |Δ| = " +
                                 short_real(worst) + ")");
    } else {
        ctx.out.report.push_back("direct vs theta-integral max |Δ| = " + short_real(worst) + " exceeds " +
                                 short_real(tol));
        ctx.check_failed = true;
    }
}

void cmd_equidist(Context& ctx) {
    const int k = k_of(ctx.cfg);
    const PreciseVector alpha = alpha_of(ctx.cfg);
    const TorusSpec spec = to_spec(alpha);
    const TestPsi p1 = parse_psi(ctx.cfg.get_string("psi1")), p2 = parse_psi(ctx.cfg.get_string("psi2"));
    const WeightH h = h_of(ctx.cfg);
    const ProbeTarget target = parse_probe_target(ctx.cfg.get_string("target"));
    const double sig_cfg = ctx.cfg.get_real("sigma");
    const double sigma = sig_cfg < 0.0 ? 0.5 * k - 1.0 : sig_cfg;
    const auto& Rs = ctx.cfg.get_reals("R");
    if (Rs.empty()) throw InvalidArgument("R list is empty");
    const double beta = ctx.cfg.get_real("beta");
    EquidistOptions eo;
    eo.theta = theta_options(ctx);
    eo.abs_tol = ctx.cfg.get_real("abs_tol");

    Table t{"equidist", "v dimensionless; value is the horocycle average", equidist_csv_header()};
    t.px = 1;
    t.py = 2;
    t.plim = 3;
    t.logx = true;
    t.xlabel = "v";
    t.ylabel = "average";
    for (double v : ctx.cfg.get_reals("v")) {
        HorocycleProbe probe(v, sigma, h, target);
        probe.R = Rs.front();
        probe.beta = beta;
        const HorocycleResult r = horocycle_average(probe, spec, p1, p2, eo);
        t.rows.push_back(equidist_csv_row(v, r.value, r.limit, probe.R, std::string(to_string(target))));
        ctx.out.report.push_back("v=" + short_real(v) + " average=" + format_real(r.value) +
                                 " limit=" + format_real(r.limit));
    }
    write_table(ctx, t);

    if (target == ProbeTarget::dominating) {
        // L1 mean against Monte-Carlo and, for several R, the cusp diagnostic.
        Table m{"dominating_mean", "R dimensionless; Haar L1 mean of F_R", "R,closed_form,monte_carlo,std_error"};
        Table c{"cusp", "v and R dimensionless; restricted integral against F_R", equidist_csv_header()};
        c.px = 4;
        c.py = 2;
        c.logx = true;
        c.xlabel = "R";
        c.ylabel = "cusp contribution";
        const auto samples = static_cast<std::size_t>(ctx.cfg.get_int("mc_samples"));
        const double kappa = ctx.cfg.get_real("kappa");
        const CuspExponents ex = cusp_exponents(kappa, k);
        for (double R : Rs) {
            const DominatingFn dom(R, p1, k, beta);
            if (samples >= 2) {
                const auto mc = l1_mean_monte_carlo(dom, samples, static_cast<std::uint64_t>(ctx.cfg.get_int("seed")), ctx.par);
                m.rows.push_back(format_real(R) + "," + format_real(l1_mean_dominating(dom)) + "," +
                                 format_real(mc.mean) + "," + format_real(mc.std_error));
            }
            for (double v : ctx.cfg.get_reals("v")) {
                const double val = cusp_contribution(dom, spec.alpha(), h, v, ctx.cfg.get_real("eps"), eo.abs_tol);
                c.rows.push_back(equidist_csv_row(v, val, std::pow(R, -ex.bound_exponent), R, "cusp"));
            }
        }
        if (!m.rows.empty()) write_table(ctx, m);
        write_table(ctx, c);
    }

    const auto& Ts = ctx.cfg.get_reals("block_T");
    if (!Ts.empty()) {
        const double kappa = ctx.cfg.get_real("kappa");
        if (!(kappa > 1.0)) throw InvalidArgument("kappa must exceed 1");
        Table b{"blocks", "T and D dimensionless; value is the block sum", "T,D,value,regime"};
        b.px = 2;
        b.py = 3;
        b.logx = true;
        b.xlabel = "D";
        b.ylabel = "block sum";
        for (double T : Ts) {
            const double crit = std::pow(T, 1.0 / (kappa - 1.0));
            std::vector<std::int64_t> Ds = ctx.cfg.get_ints("block_D");
            if (Ds.empty()) Ds.push_back(static_cast<std::int64_t>(std::floor(crit)));
            for (std::int64_t D : Ds) {
                const double val = block_sum(alpha, D, T, p1, ctx.par);
                const char* regime = D <= std::pow(T, 0.1) ? "small" : (static_cast<double>(D) <= crit ? "middle" : "large");
                b.rows.push_back(format_real(T) + "," + std::to_string(D) + "," + format_real(val) + "," + regime);
            }
        }
        write_table(ctx, b);
    }
}

void cmd_dioph(Context& ctx) {
    const PreciseVector alpha = alpha_of(ctx.cfg);
    const DiophReport r = estimate_type(alpha, ctx.cfg.get_int("q_max"), ctx.par);
    Table t{"dioph", "q integer; e_q = max_j ||q alpha_j||", dioph_csv_header()};
    t.rows = dioph_csv_rows(r);
    t.px = 1;
    t.py = 2;
    t.logx = true;
    t.logy = true;
    t.xlabel = "q";
    t.ylabel = "record e(q)";
    write_table(ctx, t);
    Table s{"dioph_summary", "kappa dimensionless",
            "k,q_max,kappa_hat,kappa_sup,worst_q,worst_error,rational,rational_q,c_hat,dirichlet_bound"};
    s.rows.push_back(std::to_string(alpha.size()) + "," + std::to_string(r.q_max) + "," + format_real(r.kappa_hat) + "," +
                     format_real(r.kappa_sup) + "," + std::to_string(r.worst_q) + "," + format_real(r.worst_error) +
                     "," + (r.rational_flag ? "true" : "false") + "," + std::to_string(r.rational_q) + "," +
                     format_real(r.c_hat) + "," + format_real(r.dirichlet_bound));
    write_table(ctx, s);
    ctx.out.report.push_back("kappa_hat=" + format_real(r.kappa_hat) + " kappa_sup=" + format_real(r.kappa_sup));
}

void cmd_degeneracy(Context& ctx) {
    const TorusSpec spec = to_spec(alpha_of(ctx.cfg));
    const auto& Xs = ctx.cfg.get_reals("degeneracy_X");
    const DegeneracyCurve curve = degeneracy_curve(spec, Xs, ctx.par);
    GrowthFit fit;
    try {
        fit = growth_fit(curve);
        ctx.out.report.push_back("fitted exponent " + format_real(fit.exponent) + " (model " +
                                 std::string(to_string(fit.model)) + ")");
    } catch (const InsufficientData& e) {
        ctx.out.report.push_back(std::string("fit skipped: ") + e.what());
    }
    Table t{"degeneracy", "X dimensionless; counts of ordered equal pairs", degeneracy_csv_header()};
    t.rows = degeneracy_csv_rows(curve, fit);
    t.px = 1;
    t.py = 3;
    t.logx = true;
    t.logy = true;
    t.xlabel = "X";
    t.ylabel = "pairs / X";
    write_table(ctx, t);
}

void cmd_convergence(Context& ctx) {
    const int k = k_of(ctx.cfg);
    const TorusSpec spec = to_spec(alpha_of(ctx.cfg));
    const auto& w = ctx.cfg.get_reals("window");
    if (w.size() != 2) throw InvalidArgument("window needs two values a,b");
    const auto& Xs = ctx.cfg.get_reals("X");
    if (Xs.empty()) throw InvalidArgument("X list is empty");
    const double X_max = *std::max_element(Xs.begin(), Xs.end());
    const SpectrumSlice s = get_slice(ctx, spec, cutoff_for_rescaled(2.0 * X_max, k));
    Table t{"convergence", "X dimensionless; relative error against the Poisson limit",
            "X,value,limit,rel_error,pair_count,counting_ratio"};
    t.px = 1;
    t.py = 4;
    t.logx = true;
    t.logy = true;
    t.xlabel = "X";
    t.ylabel = "|R2 - limit| / limit";
    for (double X : Xs) {
        const CorrEstimate e = r2_windowed(s, X, Window(w[0], w[1]), ctx.par);
        const double rel = std::fabs(e.value - e.theoretical_limit) / std::fabs(e.theoretical_limit);
        t.rows.push_back(format_real(X) + "," + format_real(e.value) + "," + format_real(e.theoretical_limit) + "," +
                         format_real(rel) + "," + std::to_string(e.pair_count) + "," +
                         format_real(counting_ratio(s, X)));
        ctx.out.report.push_back("X=" + short_real(X) + " rel_error=" + short_real(rel));
    }
    write_table(ctx, t);
}

}  // namespace

RunOutcome run(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    Context ctx{cfg, cfg.manifest_hash(), resolve_output_dir(cfg), Parallelism{static_cast<int>(cfg.get_int("workers"))},
                {}, false};
    if (cfg.get_int("workers") < 0) throw InvalidArgument("workers must be >= 0");
    std::error_code ec;
    fs::create_directories(ctx.dir, ec);
    if (ec || !fs::is_directory(ctx.dir)) throw Error("cannot create output directory " + ctx.dir.string());
    ctx.out.output_dir = ctx.dir;

    const std::string& sub = cfg.get_string("subcommand");
    if (sub == "spectrum") cmd_spectrum(ctx);
    else if (sub == "paircorr") cmd_paircorr(ctx);
    else if (sub == "theta-check") cmd_theta_check(ctx);
    else if (sub == "equidist") cmd_equidist(ctx);
    else if (sub == "dioph") cmd_dioph(ctx);
    else if (sub == "degeneracy") cmd_degeneracy(ctx);
    else if (sub == "convergence-study") cmd_convergence(ctx);
    else throw InvalidArgument("unknown subcommand '" + sub + "'");

    write_file(ctx, "config.cfg", cfg.serialize());
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest;
    manifest["tool"] = "qtorus";
    manifest["version"] = kVersion;
    manifest["subcommand"] = sub;
    manifest["manifest_hash"] = ctx.hash;
    json c = json::object();
    for (const auto& key : config_keys()) c[key.name] = format_value(cfg.values().at(key.name));
    manifest["config"] = c;
    json files = json::array();
    for (const auto& f : ctx.out.files) files.push_back(f.filename().string());
    manifest["outputs"] = files;
    manifest["report"] = ctx.out.report;
    manifest["status"] = ctx.check_failed ? "check_failed" : "ok";
    manifest["timings"] = {{"total_seconds", seconds}};
    manifest["build"] = {{"compiler", __VERSION__},
                         {"boost", BOOST_LIB_VERSION},
                         {"openmp", _OPENMP},
                         {"workers", effective_workers(ctx.par)}};
    write_file(ctx, "manifest.json", manifest.dump(2) + "\n");
    if (ctx.check_failed) ctx.out.report.push_back("status: check failed");
    return ctx.out;
}

std::string error_record_json(const std::exception& e) {
    json j;
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
        j["error"] = ce->kind();
        j["source"] = ce->source();
        j["line"] = ce->line();
        j["column"] = ce->column();
    } else if (const auto* qe = dynamic_cast<const Error*>(&e)) {
        j["error"] = qe->kind();
    } else {
        j["error"] = "internal";
    }
    j["message"] = e.what();
    return j.dump();
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const InvalidArgument*>(&e)) return 3;
    if (dynamic_cast<const InsufficientData*>(&e)) return 4;
    if (dynamic_cast<const ResourceExhausted*>(&e)) return 5;
    return 1;
}

int run_main(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        const RunOutcome r = run(cfg);
        for (const auto& line : r.report) out << line << "\n";
        out << "wrote " << r.files.size() << " files to " << r.output_dir.string() << "\n";
        const bool failed = !r.report.empty() && r.report.back() == "status: check failed";
        return failed ? 6 : 0;
    } catch (const std::exception& e) {
        const std::string rec = error_record_json(e);
        err << rec << "\n";
        try {
            const fs::path dir = resolve_output_dir(cfg);
            if (fs::is_directory(dir)) std::ofstream(dir / "error.json") << rec << "\n";
        } catch (...) {
        }
        return exit_code_for(e);
    }
}

}  // namespace qtorus
