#include "svdecomp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "svdecomp/blackscholes.hpp"
#include "svdecomp/impliedvol.hpp"
#include "svdecomp/oracles.hpp"
#include "svdecomp/path_bundle.hpp"

namespace svdecomp::cli {

ModelSpec RunConfig::build_model() const {
    if (model == "bs") return ModelSpec::black_scholes({sigma});
    if (model == "cev") return ModelSpec::cev({sigma, beta});
    if (model == "heston") return ModelSpec::heston({k, theta, nu, v0}, rho);
    if (model == "sabr") return ModelSpec::sabr({alpha, beta, sigma0}, rho);
    throw ConfigError("unknown model '" + model + "' (expected bs, cev, heston or sabr)");
}

std::string RunConfig::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "# command=" << subcommand << '\n'
       << "# model=" << build_model().describe() << '\n'
       << "# market spot=" << market.spot << " strike=" << market.strike << " rate=" << market.rate
       << " expiry=" << market.expiry << '\n'
       << "# sim paths=" << sim.n_paths << " steps=" << sim.n_steps << " seed=" << sim.seed
       << " antithetic=" << (sim.antithetic ? "on" : "off") << " threads=" << sim.threads << '\n';
    return os.str();
}

namespace {

SabrMalliavinForm parse_sabr_form(const std::string& s) {
    if (s == "chain") return SabrMalliavinForm::ChainRule;
    if (s == "printed") return SabrMalliavinForm::AsPrinted;
    throw ConfigError("unknown --sabr-form '" + s + "' (expected chain or printed)");
}

void write_rows(std::ostream& out, const std::vector<std::pair<std::string, Estimate>>& rows) {
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << std::setprecision(17) << "quantity,estimate,std_error\n";
    for (const auto& [q, e] : rows) out << q << ',' << e.estimate << ',' << e.std_error << '\n';
    out.flags(flags);
    out.precision(prec);
}

class Checker {
public:
    explicit Checker(std::ostream& log) : log_(log) {}

    void within_se(const std::string& name, const Estimate& gap, double n_se = 3.0) {
        const bool ok = std::abs(gap.estimate) <= n_se * gap.std_error;
        record(name, ok, gap.estimate, gap.std_error);
    }
    void at_most(const std::string& name, double value, double bound) {
        record(name, value <= bound, value, bound);
    }
    bool all_passed() const { return failures_ == 0; }

private:
    void record(const std::string& name, bool ok, double a, double b) {
        log_ << (ok ? "PASS " : "FAIL ") << name << std::setprecision(6) << " value=" << a << " bound/se=" << b
             << '\n';
        if (!ok) ++failures_;
    }

    std::ostream& log_;
    int failures_ = 0;
};

int run_price(const RunConfig& cfg, const ModelSpec& model, std::ostream& out) {
    const DecompositionRun run(model, cfg.market, cfg.sim, {true, false, false});
    std::vector<std::pair<std::string, Estimate>> rows{
        {"leading_bs_v0", {run.ito_leading(), 0.0}},
        {"mc_price", run.report(Method::Ito).lhs_price},
    };
    if (model.kind() == ModelKind::Heston) {
        rows.push_back({"cf_price", {heston_cf_price(model.heston_params(), cfg.market, model.rho()), 0.0}});
    }
    write_rows(out, rows);
    return kExitOk;
}

int run_decompose(const RunConfig& cfg, const ModelSpec& model, std::ostream& out) {
    DecompositionOptions opt{false, false, false, parse_sabr_form(cfg.sabr_form)};
    std::vector<Method> methods;
    if (cfg.method == "ito" || cfg.method == "all") methods.push_back(Method::Ito), opt.ito = true;
    if (cfg.method == "malliavin" || cfg.method == "all") methods.push_back(Method::Malliavin), opt.malliavin = true;
    if (cfg.method == "functional" || cfg.method == "all") {
        methods.push_back(Method::FunctionalV);
        opt.functional = true;
    }
    if (methods.empty()) {
        throw ConfigError("unknown --method '" + cfg.method + "' (expected ito, malliavin, functional or all)");
    }
    const DecompositionRun run(model, cfg.market, cfg.sim, opt);
    std::vector<DecompositionReport> reports;
    for (Method m : methods) reports.push_back(run.report(m));
    write_report_csv(out, reports);
    return kExitOk;
}

int run_check(const RunConfig& cfg, const ModelSpec& model, std::ostream& log) {
    const DecompositionRun run(model, cfg.market, cfg.sim,
                               {true, true, true, parse_sabr_form(cfg.sabr_form)});
    Checker check(log);
    const auto ito = run.report(Method::Ito);
    const auto mal = run.report(Method::Malliavin);
    check.within_se("ito.identity_gap", ito.identity_gap);
    check.within_se("malliavin.identity_gap", mal.identity_gap);
    check.within_se("ito_vs_malliavin.total", run.total_difference(Method::Ito, Method::Malliavin));
    check.at_most("functional_vs_ito.pathwise_rel", run.functional_mismatch().max(), 1e-10);
    if (model.is_exponential()) {
        check.at_most("ito.drift_adjust_nonzero_steps", static_cast<double>(ito.drift_nonzero_steps), 0.0);
        check.at_most("malliavin.drift_adjust_nonzero_steps", static_cast<double>(mal.drift_nonzero_steps), 0.0);
    }
    if (model.rho() == 0.0) check.within_se("rho_zero_identity.gap", rho_zero_identity(run).gap);
    if (model.kind() == ModelKind::Heston) {
        const double cf = heston_cf_price(model.heston_params(), cfg.market, model.rho());
        check.within_se("mc_vs_cf", {ito.lhs_price.estimate - cf, ito.lhs_price.std_error});
    }
    return check.all_passed() ? kExitOk : kExitCheckFailed;
}

int run_ivslope(const RunConfig& cfg, const ModelSpec& model, std::ostream& out) {
    IvSlopeOptions opts;
    opts.sabr_form = parse_sabr_form(cfg.sabr_form);
    std::vector<IvSlopeReport> reports;
    if (cfg.variant == "both") {
        const auto pair = iv_slope_both(model, cfg.market, cfg.sim, opts);
        reports = {pair.projection, pair.malliavin};
    } else if (cfg.variant == "projection") {
        reports.push_back(iv_slope(model, cfg.market, cfg.sim, IvVariant::Projection, opts));
    } else if (cfg.variant == "malliavin") {
        reports.push_back(iv_slope(model, cfg.market, cfg.sim, IvVariant::Malliavin, opts));
    } else {
        throw ConfigError("unknown --variant '" + cfg.variant + "' (expected projection, malliavin or both)");
    }
    write_iv_slope_csv(out, reports);
    return kExitOk;
}

void add_options(CLI::App& app, RunConfig& c) {
    app.add_option("--model", c.model, "bs | cev | heston | sabr")->capture_default_str();
    app.add_option("--sigma", c.sigma, "constant volatility (bs, cev)")->capture_default_str();
    app.add_option("--beta", c.beta, "elasticity in (0, 1] (cev, sabr)")->capture_default_str();
    app.add_option("--k", c.k, "Heston mean reversion")->capture_default_str();
    app.add_option("--theta", c.theta, "Heston long-run variance")->capture_default_str();
    app.add_option("--nu", c.nu, "Heston vol of variance")->capture_default_str();
    app.add_option("--v0", c.v0, "Heston initial variance")->capture_default_str();
    app.add_option("--alpha", c.alpha, "SABR vol of vol")->capture_default_str();
    app.add_option("--sigma0", c.sigma0, "SABR initial volatility")->capture_default_str();
    app.add_option("--rho", c.rho, "correlation in (-1, 1)")->capture_default_str();
    app.add_option("--spot", c.market.spot)->capture_default_str();
    app.add_option("--strike", c.market.strike)->capture_default_str();
    app.add_option("--rate", c.market.rate)->capture_default_str();
    app.add_option("--expiry", c.market.expiry)->capture_default_str();
    app.add_option("--paths", c.sim.n_paths)->capture_default_str();
    app.add_option("--steps", c.sim.n_steps)->capture_default_str();
    app.add_option("--seed", c.sim.seed)->capture_default_str();
    app.add_flag("--antithetic", c.sim.antithetic);
    app.add_option("--threads", c.sim.threads, "workers; 0 uses SVDECOMP_THREADS or 1")->capture_default_str();
    app.add_option("--sabr-form", c.sabr_form, "chain | printed Malliavin derivative reading")
        ->capture_default_str();
    app.add_option("--out", c.out_path, "CSV destination (default stdout)");
    app.add_option("--dump-paths", c.dump_paths, "write the simulated path bundle to this file");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
    RunConfig cfg;
    cfg.sim.threads = 0;
    CLI::App app{"Stochastic-volatility call price decompositions", "svdecomp"};
    app.set_config("--config", "", "plain `key = value` file; flags override");
    app.require_subcommand(1);
    add_options(app, cfg);
    app.add_subcommand("price", "leading term, MC price and (Heston) CF price")->fallthrough();
    auto* dec = app.add_subcommand("decompose", "decomposition report CSV")->fallthrough();
    dec->add_option("--method", cfg.method, "ito | malliavin | functional | all")->capture_default_str();
    app.add_subcommand("check", "identity suite; exit 1 on any violation")->fallthrough();
    auto* iv = app.add_subcommand("ivslope", "implied-volatility slope CSV")->fallthrough();
    iv->add_option("--variant", cfg.variant, "projection | malliavin | both")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream help, err;
        const int code = app.exit(e, help, err);
        out << help.str();
        log << err.str();
        return code == 0 ? kExitOk : kExitConfigError;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();

    try {
        cfg.sim.threads = resolve_thread_count(cfg.sim.threads);
        cfg.sim.validate();
        cfg.market.validate();
        const ModelSpec model = cfg.build_model();
        log << cfg.describe() << std::flush;

        std::ofstream file;
        if (!cfg.out_path.empty()) {
            file.open(cfg.out_path);
            if (!file) throw ConfigError("cannot open --out file '" + cfg.out_path + "'");
        }
        std::ostream& dest = cfg.out_path.empty() ? out : file;

        if (!cfg.dump_paths.empty()) {
            std::ofstream dump(cfg.dump_paths, std::ios::binary);
            if (!dump) throw ConfigError("cannot open --dump-paths file '" + cfg.dump_paths + "'");
            write_path_bundle(dump, simulate(model, cfg.market, cfg.sim));
        }

        if (cfg.subcommand == "price") return run_price(cfg, model, dest);
        if (cfg.subcommand == "decompose") return run_decompose(cfg, model, dest);
        if (cfg.subcommand == "check") return run_check(cfg, model, log);
        return run_ivslope(cfg, model, dest);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfigError;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run(args, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
}

}  // namespace svdecomp::cli
