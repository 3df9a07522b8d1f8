#include "svdecomp/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "svdecomp/blackscholes.hpp"

namespace svdecomp {

std::string to_string(Method m) {
    switch (m) {
        case Method::Ito: return "ito";
        case Method::Malliavin: return "malliavin";
        case Method::FunctionalV: return "functional";
    }
    return "unknown";
}

Estimate DecompositionReport::term(std::string_view label) const {
    for (const auto& t : terms) {
        if (t.label == label) return t.value;
    }
    return {};
}

// ---------------------------------------------------------------------------
// f = v functional

double ProjectedVolatility::value(double u, double sigma_sq) const {
    return v_projection(model_, u, T_, sigma_sq);
}

double ProjectedVolatility::variance_rate(double u, double sigma_sq) const {
    const auto c = projection_coefficients(model_, T_ - u);
    return projection_time_derivative(model_, u, T_, sigma_sq) + c.slope * model_.variance_drift(sigma_sq);
}

double ProjectedVolatility::horizontal_derivative(double u, double sigma_sq) const {
    return variance_rate(u, sigma_sq) / (2.0 * value(u, sigma_sq));
}

double ProjectedVolatility::bracket_wf_density(double u, double sigma_sq) const {
    const double f = value(u, sigma_sq);
    const double sig = std::max(std::sqrt(std::max(sigma_sq, 0.0)), kVolFloor);
    return qv_wm_density(model_, u, T_, sig) / (2.0 * f * (T_ - u));
}

double ProjectedVolatility::bracket_ff_density(double u, double sigma_sq) const {
    const double z = bracket_wf_density(u, sigma_sq);
    return z * z;
}

// ---------------------------------------------------------------------------

double FunctionalMismatch::max() const { return std::max({drift, vomma, vanna, total}); }

namespace {

struct StepGrid {
    std::vector<double> tau, sqrt_tau, disc;
    /// Quadrature weight of node j in units of dt.
    std::vector<double> weight;
    std::vector<ProjectionCoefficients> coef;
};

StepGrid make_grid(const ModelSpec& model, const MarketSpec& market, std::size_t n, TimeRule rule) {
    StepGrid g;
    g.weight.assign(n, 1.0);
    if (rule == TimeRule::Trapezoid) {
        // The integrands are undefined at tau = 0; the last node's value stands in for it.
        g.weight.front() = 0.5;
        g.weight.back() = 1.5;
    }
    const double T = market.expiry;
    const double dt = market.tau() / static_cast<double>(n);
    g.tau.resize(n);
    g.sqrt_tau.resize(n);
    g.disc.resize(n);
    g.coef.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double u = static_cast<double>(j) * dt;
        g.tau[j] = T - u;
        g.sqrt_tau[j] = std::sqrt(g.tau[j]);
        g.disc[j] = std::exp(-market.rate * u);
        g.coef[j] = projection_coefficients(model, g.tau[j]);
    }
    return g;
}

double floored_vol(double sigma_sq) { return std::max(std::sqrt(std::max(sigma_sq, 0.0)), kVolFloor); }

class PathEvaluator {
public:
    PathEvaluator(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg,
                  const DecompositionOptions& opt, const StepGrid& grid)
        : model_(model),
          market_(market),
          cfg_(cfg),
          opt_(opt),
          grid_(grid),
          functional_(model, market.expiry),
          buffer_(cfg.n_steps),
          tail_var_(cfg.n_steps),
          mall_tail_(cfg.n_steps) {}

    PathTerms evaluate(std::size_t p) {
        const std::size_t n = cfg_.n_steps;
        const double dt = market_.tau() / static_cast<double>(n);
        simulate_path(model_, market_, cfg_, p, buffer_.span());
        const PathView path = buffer_.view(dt);

        const double K = market_.strike;
        const double r = market_.rate;
        const double T = market_.expiry;
        const double rho = model_.rho();

        PathTerms out;
        out.payoff = std::exp(-r * market_.tau()) * std::max(path.S[n] - K, 0.0);

        if (opt_.malliavin) {
            double acc = 0.0;
            for (std::size_t j = n; j-- > 0;) {
                acc += std::max(path.sigma_sq[j], 0.0) * dt;
                tail_var_[j] = acc;
            }
            malliavin_tail_integrals(model_, path, mall_tail_, opt_.sabr_form);
            const double sigma_bar0 = std::max(std::sqrt(tail_var_[0] / grid_.tau[0]), kVolFloor);
            out.mal_leading = bs_price(BsPoint{0.0, market_.spot, sigma_bar0, K, r, T});
        }

        for (std::size_t j = 0; j < n; ++j) {
            const double u = static_cast<double>(j) * dt;
            const double S = path.S[j];
            const double x = std::max(path.sigma_sq[j], 0.0);
            const double sig = floored_vol(x);
            const double L = model_.normalized_diffusion(S, sig);
            const double excess = L * L - sig * sig;
            const double logm = std::log(S / K);
            const double tau = grid_.tau[j];
            const double w = grid_.disc[j] * dt * grid_.weight[j];

            if (opt_.ito) {
                const auto& c = grid_.coef[j];
                const double v = std::max(std::sqrt(std::max(c.intercept + c.slope * x, 0.0)), kVolFloor);
                const double zeta = c.bracket_power == 1 ? c.bracket_scale * sig : c.bracket_scale * sig * sig;
                const auto op = bs_operators_logm(S, logm, v, r, tau, grid_.sqrt_tau[j]);
                const double drift = 0.5 * w * op.G * excess;
                const double vomma = 0.125 * w * op.K * zeta * zeta;
                const double vanna = 0.5 * rho * w * L * op.H * zeta;
                out.ito_drift += drift;
                out.ito_vomma += vomma;
                out.ito_vanna += vanna;
                out.ito_correction += 0.5 * w * (op.G * excess + 0.25 * op.K * zeta * zeta + rho * L * op.H * zeta);
                if (drift != 0.0) ++out.ito_drift_nonzero;
                out.scale_drift += std::abs(drift);
                out.scale_vomma += std::abs(vomma);
                out.scale_vanna += std::abs(vanna);
            }
            if (opt_.malliavin) {
                const double sbar = std::max(std::sqrt(tail_var_[j] / tau), kVolFloor);
                const auto op = bs_operators_logm(S, logm, sbar, r, tau, grid_.sqrt_tau[j]);
                const double drift = 0.5 * w * op.G * excess;
                out.mal_drift += drift;
                const double vanna = 0.5 * rho * w * L * op.H * mall_tail_[j];
                out.mal_vanna += vanna;
                out.mal_correction += 0.5 * w * (op.G * excess + rho * L * op.H * mall_tail_[j]);
                out.scale_mal += std::abs(drift) + std::abs(vanna);
                if (drift != 0.0) ++out.mal_drift_nonzero;
            }
            if (opt_.functional) {
                const double f = functional_.value(u, x);
                const auto op = bs_operators(BsPoint{u, S, f, K, r, T});
                const double dtf = w * f * tau * op.G * functional_.horizontal_derivative(u, x);
                const double drift = 0.5 * w * op.G * (L * L - f * f);
                const double vomma = 0.5 * w * f * f * tau * tau * op.K * functional_.bracket_ff_density(u, x);
                const double vanna = rho * w * f * tau * L * op.H * functional_.bracket_wf_density(u, x);
                out.fun_dtf += dtf;
                out.fun_drift += drift;
                out.fun_vomma += vomma;
                out.fun_vanna += vanna;
                out.scale_drift += std::abs(dtf) + std::abs(drift);
                out.scale_vomma += std::abs(vomma);
                out.scale_vanna += std::abs(vanna);
            }
        }
        return out;
    }

private:
    const ModelSpec& model_;
    const MarketSpec& market_;
    const SimConfig& cfg_;
    const DecompositionOptions& opt_;
    const StepGrid& grid_;
    ProjectedVolatility functional_;
    PathBuffer buffer_;
    std::vector<double> tail_var_;
    std::vector<double> mall_tail_;
};

double relative_gap(double a, double b, double scale) {
    const double d = std::abs(a - b);
    if (d == 0.0) return 0.0;
    return scale > 0.0 ? d / scale : d;
}

}  // namespace

DecompositionRun::DecompositionRun(ModelSpec model, MarketSpec market, SimConfig cfg,
                                   DecompositionOptions options)
    : model_(std::move(model)), market_(market), cfg_(cfg), options_(options) {
    cfg_.validate();
    market_.validate();
    if (market_.valuation_time != 0.0) {
        throw ConfigError("decompositions are evaluated at inception: valuation_time must be 0");
    }
    const double v0 = v_projection(model_, 0.0, market_.expiry, model_.initial_variance());
    ito_leading_ = bs_price(BsPoint{0.0, market_.spot, v0, market_.strike, market_.rate, market_.expiry});
    const ProjectedVolatility f(model_, market_.expiry);
    functional_leading_ = bs_price(BsPoint{0.0, market_.spot, f.value(0.0, model_.initial_variance()),
                                           market_.strike, market_.rate, market_.expiry});

    const StepGrid grid = make_grid(model_, market_, cfg_.n_steps, options_.time_rule);
    paths_.resize(cfg_.n_paths);
    parallel_for_blocks(cfg_.n_paths, cfg_.threads, [&](std::size_t begin, std::size_t end) {
        PathEvaluator eval(model_, market_, cfg_, options_, grid);
        for (std::size_t p = begin; p < end; ++p) paths_[p] = eval.evaluate(p);
    });
}

void DecompositionRun::require(Method m) const {
    const bool ok = (m == Method::Ito && options_.ito) || (m == Method::Malliavin && options_.malliavin) ||
                    (m == Method::FunctionalV && options_.functional);
    if (!ok) throw std::logic_error("decomposition method " + to_string(m) + " was not computed in this run");
}

Estimate DecompositionRun::reduce(std::span<const double> per_path) const {
    return mc_mean_se(per_path, cfg_.antithetic);
}

std::vector<double> DecompositionRun::path_totals(Method m) const {
    require(m);
    std::vector<double> out(paths_.size());
    for (std::size_t p = 0; p < paths_.size(); ++p) {
        const auto& t = paths_[p];
        switch (m) {
            case Method::Ito: out[p] = ito_leading_ + t.ito_drift + t.ito_vomma + t.ito_vanna; break;
            case Method::Malliavin: out[p] = t.mal_leading + t.mal_drift + t.mal_vanna; break;
            case Method::FunctionalV:
                out[p] = functional_leading_ + t.fun_dtf + t.fun_drift + t.fun_vomma + t.fun_vanna;
                break;
        }
    }
    return out;
}

DecompositionReport DecompositionRun::report(Method m) const {
    require(m);
    const std::size_t n = paths_.size();
    auto column = [&](auto field) {
        std::vector<double> v(n);
        for (std::size_t p = 0; p < n; ++p) v[p] = field(paths_[p]);
        return v;
    };
    DecompositionReport rep;
    rep.method = m;
    const auto payoff = column([](const PathTerms& t) { return t.payoff; });
    rep.lhs_price = reduce(payoff);
    const auto totals = path_totals(m);
    rep.total = reduce(totals);
    std::vector<double> gap(n);
    for (std::size_t p = 0; p < n; ++p) gap[p] = payoff[p] - totals[p];
    rep.identity_gap = reduce(gap);

    auto add = [&](std::string_view label, auto field) {
        rep.terms.push_back({std::string(label), reduce(column(field))});
    };
    switch (m) {
        case Method::Ito:
            rep.leading = {ito_leading_, 0.0};
            add(labels::kDriftAdjust, [](const PathTerms& t) { return t.ito_drift; });
            add(labels::kVomma, [](const PathTerms& t) { return t.ito_vomma; });
            add(labels::kVanna, [](const PathTerms& t) { return t.ito_vanna; });
            for (const auto& t : paths_) rep.drift_nonzero_steps += t.ito_drift_nonzero;
            break;
        case Method::Malliavin:
            rep.leading = reduce(column([](const PathTerms& t) { return t.mal_leading; }));
            add(labels::kDriftAdjust, [](const PathTerms& t) { return t.mal_drift; });
            add(labels::kVanna, [](const PathTerms& t) { return t.mal_vanna; });
            for (const auto& t : paths_) rep.drift_nonzero_steps += t.mal_drift_nonzero;
            break;
        case Method::FunctionalV:
            rep.leading = {functional_leading_, 0.0};
            add(labels::kDriftAdjust, [](const PathTerms& t) { return t.fun_drift; });
            add(labels::kVomma, [](const PathTerms& t) { return t.fun_vomma; });
            add(labels::kVanna, [](const PathTerms& t) { return t.fun_vanna; });
            add(labels::kDtf, [](const PathTerms& t) { return t.fun_dtf; });
            break;
    }
    return rep;
}

Estimate DecompositionRun::total_difference(Method a, Method b) const {
    const auto ta = path_totals(a);
    const auto tb = path_totals(b);
    std::vector<double> d(ta.size());
    for (std::size_t p = 0; p < d.size(); ++p) d[p] = ta[p] - tb[p];
    return reduce(d);
}

FunctionalMismatch DecompositionRun::functional_mismatch() const {
    require(Method::Ito);
    require(Method::FunctionalV);
    FunctionalMismatch m;
    for (const auto& t : paths_) {
        m.drift = std::max(m.drift, relative_gap(t.ito_drift, t.fun_dtf + t.fun_drift, t.scale_drift));
        m.vomma = std::max(m.vomma, relative_gap(t.ito_vomma, t.fun_vomma, t.scale_vomma));
        m.vanna = std::max(m.vanna, relative_gap(t.ito_vanna, t.fun_vanna, t.scale_vanna));
        const double ito = ito_leading_ + t.ito_drift + t.ito_vomma + t.ito_vanna;
        const double fun = functional_leading_ + t.fun_dtf + t.fun_drift + t.fun_vomma + t.fun_vanna;
        const double scale = std::abs(ito_leading_) + std::abs(functional_leading_) + t.scale_drift +
                             t.scale_vomma + t.scale_vanna;
        m.total = std::max(m.total, relative_gap(ito, fun, scale));
    }
    return m;
}

DecompositionReport ito_decompose(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg) {
    return DecompositionRun(model, market, cfg, {true, false, false}).report(Method::Ito);
}

DecompositionReport malliavin_decompose(const ModelSpec& model, const MarketSpec& market,
                                        const SimConfig& cfg, SabrMalliavinForm form) {
    return DecompositionRun(model, market, cfg, {false, true, false, form}).report(Method::Malliavin);
}

DecompositionReport functional_decompose_v(const ModelSpec& model, const MarketSpec& market,
                                           const SimConfig& cfg) {
    return DecompositionRun(model, market, cfg, {false, false, true}).report(Method::FunctionalV);
}

RhoZeroIdentity rho_zero_identity(const DecompositionRun& run) {
    if (run.model().rho() != 0.0) throw ConfigError("rho_zero_identity requires rho = 0");
    if (!run.options().ito || !run.options().malliavin) {
        throw std::logic_error("rho_zero_identity needs both Ito and Malliavin terms");
    }
    const auto paths = run.paths();
    const std::size_t n = paths.size();
    std::vector<double> lhs(n), rhs(n), printed(n), gap(n), gap_printed(n);
    for (std::size_t p = 0; p < n; ++p) {
        const auto& t = paths[p];
        lhs[p] = t.mal_leading - run.ito_leading();
        rhs[p] = (t.ito_drift - t.mal_drift) + t.ito_vomma;
        printed[p] = -rhs[p];
        gap[p] = lhs[p] - rhs[p];
        gap_printed[p] = lhs[p] - printed[p];
    }
    return {run.reduce(lhs), run.reduce(rhs), run.reduce(printed), run.reduce(gap), run.reduce(gap_printed)};
}

RhoZeroIdentity rho_zero_identity(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg) {
    if (model.rho() != 0.0) throw ConfigError("rho_zero_identity requires rho = 0");
    return rho_zero_identity(DecompositionRun(model, market, cfg, {true, true, false}));
}

void write_report_csv(std::ostream& out, std::span<const DecompositionReport> reports, bool header) {
    const auto old_flags = out.flags();
    const auto old_prec = out.precision();
    out << std::setprecision(17);
    if (header) out << "method,label,estimate,std_error\n";
    auto row = [&](const std::string& method, std::string_view label, const Estimate& e) {
        out << method << ',' << label << ',' << e.estimate << ',' << e.std_error << '\n';
    };
    for (const auto& r : reports) {
        const std::string m = to_string(r.method);
        row(m, "leading", r.leading);
        for (const auto& t : r.terms) row(m, t.label, t.value);
        row(m, "total", r.total);
        row(m, "lhs_price", r.lhs_price);
        row(m, "identity_gap", r.identity_gap);
    }
    out.flags(old_flags);
    out.precision(old_prec);
}

}  // namespace svdecomp
