#include "svdecomp/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace svdecomp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_rho(double rho) {
    if (!(rho > -1.0 && rho < 1.0)) {
        std::ostringstream os;
        os << "rho must lie in (-1, 1), got " << rho;
        throw ConfigError(os.str());
    }
}

void check_beta(double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) {
        std::ostringstream os;
        os << "beta must lie in (0, 1], got " << beta;
        throw ConfigError(os.str());
    }
}

/// (1 - exp(-x))/x, stable near 0.
double decay_average(double x) { return x > 0.0 ? -std::expm1(-x) / x : 1.0; }

/// (exp(x) - 1)/x, stable near 0.
double growth_average(double x) { return x > 0.0 ? std::expm1(x) / x : 1.0; }

}  // namespace

void MarketSpec::validate() const {
    if (!(spot > 0.0)) throw ConfigError("spot must be > 0");
    if (!(strike > 0.0)) throw ConfigError("strike must be > 0");
    if (!std::isfinite(rate)) throw ConfigError("rate must be finite");
    if (!(expiry > valuation_time)) throw ConfigError("expiry must exceed the valuation time");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::BlackScholes: return "bs";
        case ModelKind::CEV: return "cev";
        case ModelKind::Heston: return "heston";
        case ModelKind::SABR: return "sabr";
    }
    return "unknown";
}

ModelSpec ModelSpec::black_scholes(BlackScholesParams p) {
    if (!(p.sigma > 0.0)) throw ConfigError("Black-Scholes sigma must be > 0");
    return ModelSpec(p, 0.0);
}

ModelSpec ModelSpec::cev(CevParams p) {
    if (!(p.sigma > 0.0)) throw ConfigError("CEV sigma must be > 0");
    check_beta(p.beta);
    return ModelSpec(p, 0.0);
}

ModelSpec ModelSpec::heston(HestonParams p, double rho) {
    check_rho(rho);
    if (!(p.k > 0.0)) throw ConfigError("Heston k must be > 0");
    if (!(p.theta_bar > 0.0)) throw ConfigError("Heston theta must be > 0");
    if (!(p.nu >= 0.0)) throw ConfigError("Heston nu must be >= 0");
    if (!(p.sigma0_sq > 0.0)) throw ConfigError("Heston v0 (initial variance) must be > 0");
    if (!(2.0 * p.k * p.theta_bar > p.nu * p.nu)) {
        std::ostringstream os;
        os << "Heston parameters violate the Feller condition 2*k*theta > nu^2 (2*k*theta = "
           << 2.0 * p.k * p.theta_bar << ", nu^2 = " << p.nu * p.nu
           << "); lower nu or raise k/theta";
        throw ConfigError(os.str());
    }
    return ModelSpec(p, rho);
}

ModelSpec ModelSpec::sabr(SabrParams p, double rho) {
    check_rho(rho);
    if (!(p.alpha >= 0.0)) throw ConfigError("SABR alpha must be >= 0");
    check_beta(p.beta);
    if (!(p.sigma0 > 0.0)) throw ConfigError("SABR sigma0 must be > 0");
    return ModelSpec(p, rho);
}

ModelKind ModelSpec::kind() const {
    return std::visit(overloaded{[](const BlackScholesParams&) { return ModelKind::BlackScholes; },
                                 [](const CevParams&) { return ModelKind::CEV; },
                                 [](const HestonParams&) { return ModelKind::Heston; },
                                 [](const SabrParams&) { return ModelKind::SABR; }},
                      params_);
}

double ModelSpec::beta() const {
    return std::visit(overloaded{[](const BlackScholesParams&) { return 1.0; },
                                 [](const CevParams& p) { return p.beta; },
                                 [](const HestonParams&) { return 1.0; },
                                 [](const SabrParams& p) { return p.beta; }},
                      params_);
}

double ModelSpec::vol_of_vol() const {
    return std::visit(overloaded{[](const BlackScholesParams&) { return 0.0; },
                                 [](const CevParams&) { return 0.0; },
                                 [](const HestonParams& p) { return p.nu; },
                                 [](const SabrParams& p) { return p.alpha; }},
                      params_);
}

double ModelSpec::initial_variance() const {
    return std::visit(overloaded{[](const BlackScholesParams& p) { return p.sigma * p.sigma; },
                                 [](const CevParams& p) { return p.sigma * p.sigma; },
                                 [](const HestonParams& p) { return p.sigma0_sq; },
                                 [](const SabrParams& p) { return p.sigma0 * p.sigma0; }},
                      params_);
}

double ModelSpec::diffusion(double S, double sigma) const {
    const double b = beta();
    return b == 1.0 ? sigma * S : sigma * std::pow(S, b);
}

double ModelSpec::normalized_diffusion(double S, double sigma) const {
    const double b = beta();
    return b == 1.0 ? sigma : sigma * std::pow(S, b - 1.0);
}

double ModelSpec::variance_drift(double sigma_sq) const {
    return std::visit(
        overloaded{[](const BlackScholesParams&) { return 0.0; },
                   [](const CevParams&) { return 0.0; },
                   [&](const HestonParams& p) { return p.k * (p.theta_bar - sigma_sq); },
                   [&](const SabrParams& p) { return p.alpha * p.alpha * sigma_sq; }},
        params_);
}

const HestonParams& ModelSpec::heston_params() const {
    if (auto* p = std::get_if<HestonParams>(&params_)) return *p;
    throw std::logic_error("model is not Heston");
}

const SabrParams& ModelSpec::sabr_params() const {
    if (auto* p = std::get_if<SabrParams>(&params_)) return *p;
    throw std::logic_error("model is not SABR");
}

const CevParams& ModelSpec::cev_params() const {
    if (auto* p = std::get_if<CevParams>(&params_)) return *p;
    throw std::logic_error("model is not CEV");
}

const BlackScholesParams& ModelSpec::black_scholes_params() const {
    if (auto* p = std::get_if<BlackScholesParams>(&params_)) return *p;
    throw std::logic_error("model is not Black-Scholes");
}

std::string ModelSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(overloaded{[&](const BlackScholesParams& p) { os << "bs sigma=" << p.sigma; },
                          [&](const CevParams& p) {
                              os << "cev sigma=" << p.sigma << " beta=" << p.beta;
                          },
                          [&](const HestonParams& p) {
                              os << "heston k=" << p.k << " theta=" << p.theta_bar
                                 << " nu=" << p.nu << " v0=" << p.sigma0_sq;
                          },
                          [&](const SabrParams& p) {
                              os << "sabr alpha=" << p.alpha << " beta=" << p.beta
                                 << " sigma0=" << p.sigma0;
                          }},
               params_);
    os << " rho=" << rho_;
    return os.str();
}

ProjectionCoefficients projection_coefficients(const ModelSpec& model, double tau) {
    switch (model.kind()) {
        case ModelKind::Heston: {
            const auto& p = model.heston_params();
            const double phi = decay_average(p.k * tau);
            return {p.theta_bar * (1.0 - phi), phi, p.nu * tau * phi, 1};
        }
        case ModelKind::SABR: {
            const auto& p = model.sabr_params();
            const double psi = growth_average(p.alpha * p.alpha * tau);
            return {0.0, psi, 2.0 * p.alpha * tau * psi, 2};
        }
        case ModelKind::BlackScholes:
        case ModelKind::CEV: break;
    }
    return {0.0, 1.0, 0.0, 1};
}

double expected_variance(const ModelSpec& model, double t, double s, double sigma_t_sq) {
    const double h = s - t;
    switch (model.kind()) {
        case ModelKind::Heston: {
            const auto& p = model.heston_params();
            return p.theta_bar + (sigma_t_sq - p.theta_bar) * std::exp(-p.k * h);
        }
        case ModelKind::SABR: {
            const auto& p = model.sabr_params();
            return sigma_t_sq * std::exp(p.alpha * p.alpha * h);
        }
        case ModelKind::BlackScholes:
        case ModelKind::CEV: break;
    }
    return sigma_t_sq;
}

double v_projection(const ModelSpec& model, double t, double T, double sigma_t_sq) {
    const double tau = T - t;
    if (!(tau > 0.0)) throw std::domain_error("v_projection: T - t must be > 0");
    const auto c = projection_coefficients(model, tau);
    const double v2 = c.intercept + c.slope * sigma_t_sq;
    return std::max(std::sqrt(std::max(v2, 0.0)), kVolFloor);
}

double projection_time_derivative(const ModelSpec& model, double t, double T, double sigma_t_sq) {
    const double tau = T - t;
    switch (model.kind()) {
        case ModelKind::Heston: {
            // v^2 = theta + (x - theta) phi(tau), d/dtau phi = (e^{-k tau} - phi)/tau
            const auto& p = model.heston_params();
            const double x = p.k * tau;
            const double dphi = x < 1e-4 ? p.k * (-0.5 + x / 3.0)
                                         : (std::exp(-x) - decay_average(x)) / tau;
            return -(sigma_t_sq - p.theta_bar) * dphi;
        }
        case ModelKind::SABR: {
            // v^2 = x psi(tau), d/dtau psi = (e^{a^2 tau} - psi)/tau
            const auto& p = model.sabr_params();
            const double a2 = p.alpha * p.alpha;
            const double x = a2 * tau;
            const double dpsi = x < 1e-4 ? a2 * (0.5 + x / 3.0)
                                         : (std::exp(x) - growth_average(x)) / tau;
            return -sigma_t_sq * dpsi;
        }
        case ModelKind::BlackScholes:
        case ModelKind::CEV: break;
    }
    return 0.0;
}

double qv_wm_density(const ModelSpec& model, double t, double T, double sigma_t) {
    const auto c = projection_coefficients(model, T - t);
    return c.bracket_power == 1 ? c.bracket_scale * sigma_t : c.bracket_scale * sigma_t * sigma_t;
}

double qv_mm_density(const ModelSpec& model, double t, double T, double sigma_t) {
    const double z = qv_wm_density(model, t, T, sigma_t);
    return z * z;
}

namespace {

/// Heston log-increment of D_u sigma^2(.) across step m.
double heston_malliavin_exponent(const HestonParams& p, double sigma_sq, double dW, double dt) {
    const double sig = std::max(std::sqrt(std::max(sigma_sq, 0.0)), kVolFloor);
    return 0.5 * p.nu / sig * dW - (p.k + p.nu * p.nu / (8.0 * sig * sig)) * dt;
}

}  // namespace

double malliavin_dsigma2(const ModelSpec& model, const PathView& path, std::size_t u_idx,
                         std::size_t r_idx, SabrMalliavinForm form) {
    if (u_idx > r_idx) throw std::invalid_argument("malliavin_dsigma2: requires u_idx <= r_idx");
    if (r_idx >= path.sigma_sq.size()) throw std::out_of_range("malliavin_dsigma2: r_idx past grid");
    switch (model.kind()) {
        case ModelKind::Heston: {
            const auto& p = model.heston_params();
            double expo = 0.0;
            for (std::size_t m = u_idx; m < r_idx; ++m) {
                expo += heston_malliavin_exponent(p, path.sigma_sq[m], path.dW[m], path.dt);
            }
            const double sig_u = std::max(std::sqrt(std::max(path.sigma_sq[u_idx], 0.0)), kVolFloor);
            return p.nu * sig_u * std::exp(expo);
        }
        case ModelKind::SABR: {
            const auto& p = model.sabr_params();
            const std::size_t at = form == SabrMalliavinForm::ChainRule ? r_idx : u_idx;
            return 2.0 * p.alpha * path.sigma_sq[at];
        }
        case ModelKind::BlackScholes:
        case ModelKind::CEV: break;
    }
    return 0.0;
}

void malliavin_tail_integrals(const ModelSpec& model, const PathView& path, std::span<double> out,
                              SabrMalliavinForm form) {
    const std::size_t n = path.n_steps();
    if (out.size() != n) throw std::invalid_argument("malliavin_tail_integrals: output size mismatch");
    const double dt = path.dt;
    switch (model.kind()) {
        case ModelKind::Heston: {
            const auto& p = model.heston_params();
            // J_j = dt + exp(a_j) J_{j+1}, J_n = 0
            double J = 0.0;
            for (std::size_t j = n; j-- > 0;) {
                J = dt + std::exp(heston_malliavin_exponent(p, path.sigma_sq[j], path.dW[j], dt)) * J;
                const double sig = std::max(std::sqrt(std::max(path.sigma_sq[j], 0.0)), kVolFloor);
                out[j] = p.nu * sig * J;
            }
            return;
        }
        case ModelKind::SABR: {
            const double two_alpha = 2.0 * model.sabr_params().alpha;
            if (form == SabrMalliavinForm::ChainRule) {
                double tail = 0.0;
                for (std::size_t j = n; j-- > 0;) {
                    tail += path.sigma_sq[j] * dt;
                    out[j] = two_alpha * tail;
                }
            } else {
                for (std::size_t j = 0; j < n; ++j) {
                    out[j] = two_alpha * path.sigma_sq[j] * static_cast<double>(n - j) * dt;
                }
            }
            return;
        }
        case ModelKind::BlackScholes:
        case ModelKind::CEV: break;
    }
    std::fill(out.begin(), out.end(), 0.0);
}

}  // namespace svdecomp
