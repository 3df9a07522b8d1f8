#include "svdecomp/impliedvol.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "svdecomp/blackscholes.hpp"

namespace svdecomp {

std::string to_string(IvVariant v) { return v == IvVariant::Projection ? "projection" : "malliavin"; }

double atm_forward_spot(const MarketSpec& market) {
    return market.strike * std::exp(-market.rate * market.tau());
}

namespace {

constexpr double kSplitTolerance = 1e-12;

struct PathF {
    double F1, F2, F3, scale;
};

PathF path_f(const PathTerms& t, IvVariant variant) {
    if (variant == IvVariant::Projection) {
        return {t.ito_correction, t.ito_vanna, t.ito_drift + t.ito_vomma,
                t.scale_drift + t.scale_vomma + t.scale_vanna};
    }
    return {t.mal_correction, t.mal_vanna, t.mal_drift, t.scale_mal};
}

void check_split(std::span<const PathTerms> paths, IvVariant variant) {
    for (std::size_t p = 0; p < paths.size(); ++p) {
        const PathF f = path_f(paths[p], variant);
        const double gap = std::abs(f.F1 - f.F2 - f.F3);
        if (gap > kSplitTolerance * f.scale && gap > 0.0) {
            std::ostringstream os;
            os.precision(17);
            os << "F1 != F2 + F3 on path " << p << " (" << to_string(variant) << "): gap " << gap
               << ", scale " << f.scale;
            throw std::logic_error(os.str());
        }
    }
}

DecompositionOptions run_options(IvVariant variant, SabrMalliavinForm form) {
    DecompositionOptions o;
    o.ito = variant == IvVariant::Projection;
    o.malliavin = variant == IvVariant::Malliavin;
    o.functional = false;
    o.sabr_form = form;
    return o;
}

FTerms reduce_f(const DecompositionRun& run, IvVariant variant) {
    const auto paths = run.paths();
    check_split(paths, variant);
    std::vector<double> f1(paths.size()), f2(paths.size()), f3(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) {
        const PathF f = path_f(paths[p], variant);
        f1[p] = f.F1;
        f2[p] = f.F2;
        f3[p] = f.F3;
    }
    return {run.reduce(f1), run.reduce(f2), run.reduce(f3)};
}

struct BumpedRuns {
    double s_star;
    double h;
    DecompositionRun center;
    DecompositionRun up;
    DecompositionRun down;
};

MarketSpec at_spot(MarketSpec m, double spot) {
    m.spot = spot;
    return m;
}

BumpedRuns run_bumped(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg,
                      const DecompositionOptions& opt, double relative_bump) {
    if (!(relative_bump > 0.0)) throw ConfigError("relative bump must be > 0");
    market.validate();
    if (market.valuation_time != 0.0) throw ConfigError("implied-vol slope is evaluated at inception");
    const double s_star = atm_forward_spot(market);
    const double h = relative_bump * s_star;
    return {s_star, h, DecompositionRun(model, at_spot(market, s_star), cfg, opt),
            DecompositionRun(model, at_spot(market, s_star + h), cfg, opt),
            DecompositionRun(model, at_spot(market, s_star - h), cfg, opt)};
}

double mc_implied_vol(double price, const MarketSpec& m) {
    return implied_vol(price, OptionPoint{0.0, m.spot, m.strike, m.rate, m.expiry});
}

double vega_at(double sigma, const MarketSpec& m) {
    return bs_vega(BsPoint{0.0, m.spot, sigma, m.strike, m.rate, m.expiry});
}

std::vector<double> payoffs(const DecompositionRun& run) {
    std::vector<double> v(run.paths().size());
    for (std::size_t p = 0; p < v.size(); ++p) v[p] = run.paths()[p].payoff;
    return v;
}

/// Per-path samples of the slope formula for one variant, alongside the report.
struct SlopeSamples {
    IvSlopeReport report;
    std::vector<double> formula;
};

SlopeSamples assemble(const BumpedRuns& runs, IvVariant variant) {
    const auto& c = runs.center;
    check_split(c.paths(), variant);
    check_split(runs.up.paths(), variant);
    check_split(runs.down.paths(), variant);

    IvSlopeReport rep;
    rep.variant = variant;
    rep.s_star = runs.s_star;
    rep.bump = runs.h;

    const auto pay_c = payoffs(c);
    const auto pay_u = payoffs(runs.up);
    const auto pay_d = payoffs(runs.down);
    rep.price = c.reduce(pay_c);
    rep.implied_vol = mc_implied_vol(rep.price.estimate, c.market());
    rep.vega = vega_at(rep.implied_vol, c.market());

    const double iv_u = mc_implied_vol(c.reduce(pay_u).estimate, runs.up.market());
    const double iv_d = mc_implied_vol(c.reduce(pay_d).estimate, runs.down.market());
    const double vega_u = vega_at(iv_u, runs.up.market());
    const double vega_d = vega_at(iv_d, runs.down.market());

    const std::size_t n = pay_c.size();
    std::vector<double> f1(n), f2(n), f3(n), d2(n), d3(n), formula(n), printed(n), fd(n), gap(n);
    const double two_h = 2.0 * runs.h;
    const double two_s = 2.0 * runs.s_star;
    for (std::size_t p = 0; p < n; ++p) {
        const PathF fc = path_f(c.paths()[p], variant);
        const PathF fu = path_f(runs.up.paths()[p], variant);
        const PathF fdn = path_f(runs.down.paths()[p], variant);
        f1[p] = fc.F1;
        f2[p] = fc.F2;
        f3[p] = fc.F3;
        d2[p] = (fu.F2 - fdn.F2) / two_h;
        d3[p] = (fu.F3 - fdn.F3) / two_h;
        formula[p] = (d2[p] + d3[p] - f1[p] / two_s) / rep.vega;
        printed[p] = (d2[p] - (f1[p] + d3[p]) / two_s) / rep.vega;
        // First-order expansion of I(price) around each bumped mean price.
        fd[p] = (pay_u[p] / vega_u - pay_d[p] / vega_d) / two_h;
        gap[p] = formula[p] - fd[p];
    }
    rep.F1 = c.reduce(f1);
    rep.F2 = c.reduce(f2);
    rep.F3 = c.reduce(f3);
    rep.dF2 = c.reduce(d2);
    rep.dF3 = c.reduce(d3);
    rep.slope_formula = c.reduce(formula);
    rep.slope_formula_as_printed = c.reduce(printed);
    rep.slope_fd = {(iv_u - iv_d) / two_h, c.reduce(fd).std_error};
    rep.slope_gap = {rep.slope_formula.estimate - rep.slope_fd.estimate, c.reduce(gap).std_error};
    return {rep, std::move(formula)};
}

}  // namespace

FTerms f_terms(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg, IvVariant variant) {
    const double s_star = atm_forward_spot(market);
    if (std::abs(market.spot - s_star) > 1e-12 * s_star) {
        std::ostringstream os;
        os.precision(17);
        os << "f_terms: spot " << market.spot << " is not the ATM-forward level " << s_star;
        throw ConfigError(os.str());
    }
    const DecompositionRun run(model, market, cfg, run_options(variant, SabrMalliavinForm::ChainRule));
    return reduce_f(run, variant);
}

IvSlopeReport iv_slope(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg,
                       IvVariant variant, const IvSlopeOptions& opts) {
    const auto runs = run_bumped(model, market, cfg, run_options(variant, opts.sabr_form), opts.relative_bump);
    return assemble(runs, variant).report;
}

IvSlopePair iv_slope_both(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg,
                          const IvSlopeOptions& opts) {
    DecompositionOptions o;
    o.ito = true;
    o.malliavin = true;
    o.functional = false;
    o.sabr_form = opts.sabr_form;
    const auto runs = run_bumped(model, market, cfg, o, opts.relative_bump);
    auto proj = assemble(runs, IvVariant::Projection);
    auto mall = assemble(runs, IvVariant::Malliavin);
    std::vector<double> diff(proj.formula.size());
    for (std::size_t p = 0; p < diff.size(); ++p) diff[p] = proj.formula[p] - mall.formula[p];
    return {proj.report, mall.report, runs.center.reduce(diff)};
}

void write_iv_slope_csv(std::ostream& out, std::span<const IvSlopeReport> reports, bool header) {
    const auto old_flags = out.flags();
    const auto old_prec = out.precision();
    out << std::setprecision(17);
    if (header) out << "quantity,estimate,std_error\n";
    for (const auto& r : reports) {
        const std::string v = to_string(r.variant) + ".";
        auto row = [&](const char* q, const Estimate& e) {
            out << v << q << ',' << e.estimate << ',' << e.std_error << '\n';
        };
        row("s_star", {r.s_star, 0.0});
        row("bump", {r.bump, 0.0});
        row("price", r.price);
        row("implied_vol", {r.implied_vol, 0.0});
        row("vega", {r.vega, 0.0});
        row("F1", r.F1);
        row("F2", r.F2);
        row("F3", r.F3);
        row("dF2", r.dF2);
        row("dF3", r.dF3);
        row("slope_formula", r.slope_formula);
        row("slope_formula_as_printed", r.slope_formula_as_printed);
        row("slope_fd", r.slope_fd);
        row("slope_gap", r.slope_gap);
    }
    out.flags(old_flags);
    out.precision(old_prec);
}

}  // namespace svdecomp
