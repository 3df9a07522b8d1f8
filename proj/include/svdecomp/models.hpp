#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "svdecomp/path_bundle.hpp"

namespace svdecomp {

/// Parameter-validation failure (Feller, |rho| < 1, beta range, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Simulated volatilities are floored here before entering BS operators.
inline constexpr double kVolFloor = 1e-10;
/// Euler prices are floored here.
inline constexpr double kSpotFloor = 1e-12;

struct MarketSpec {
    double spot = 100.0;
    double strike = 100.0;
    double rate = 0.0;
    double expiry = 1.0;
    double valuation_time = 0.0;

    double tau() const { return expiry - valuation_time; }
    void validate() const;
};

enum class ModelKind { BlackScholes, CEV, Heston, SABR };

std::string to_string(ModelKind kind);

struct BlackScholesParams {
    double sigma = 0.2;
};

struct CevParams {
    double sigma = 0.2;
    double beta = 1.0;
};

/// dsigma^2 = k(theta_bar - sigma^2)dt + nu*sigma dW.
struct HestonParams {
    double k = 2.0;
    double theta_bar = 0.04;
    double nu = 0.3;
    double sigma0_sq = 0.04;
};

/// dsigma = alpha*sigma dW, price diffusion sigma*S^beta.
struct SabrParams {
    double alpha = 0.5;
    double beta = 1.0;
    double sigma0 = 0.2;
};

/// dS = r S dt + theta(t,S,sigma)(rho dW + sqrt(1-rho^2) dB) with one of the
/// catalog volatility structures. The constructors validate parameters.
class ModelSpec {
public:
    static ModelSpec black_scholes(BlackScholesParams p);
    static ModelSpec cev(CevParams p);
    static ModelSpec heston(HestonParams p, double rho);
    static ModelSpec sabr(SabrParams p, double rho);

    ModelKind kind() const;
    double rho() const { return rho_; }
    /// Elasticity of theta in S; 1 for the exponential models.
    double beta() const;
    bool is_exponential() const { return beta() == 1.0; }
    /// Vol-of-vol; zero for the constant-volatility kinds.
    double vol_of_vol() const;
    double initial_variance() const;

    double drift(double rate, double S) const { return rate * S; }
    /// theta(t,S,sigma).
    double diffusion(double S, double sigma) const;
    /// L = theta/S, evaluated as sigma*S^(beta-1) so that L == sigma exactly
    /// for exponential models.
    double normalized_diffusion(double S, double sigma) const;
    /// Drift coefficient of sigma^2 under the model.
    double variance_drift(double sigma_sq) const;

    const HestonParams& heston_params() const;
    const SabrParams& sabr_params() const;
    const CevParams& cev_params() const;
    const BlackScholesParams& black_scholes_params() const;

    std::string describe() const;

private:
    using Params = std::variant<BlackScholesParams, CevParams, HestonParams, SabrParams>;
    ModelSpec(Params p, double rho) : params_(p), rho_(rho) {}

    Params params_;
    double rho_ = 0.0;
};

/// Affine structure shared by all catalog models:
///   v^2(t) = intercept + slope * sigma^2(t)
///   zeta(t) = bracket_scale * sigma(t)^bracket_power   (density of d[W,M])
struct ProjectionCoefficients {
    double intercept = 0.0;
    double slope = 1.0;
    double bracket_scale = 0.0;
    int bracket_power = 1;
};

ProjectionCoefficients projection_coefficients(const ModelSpec& model, double tau);

/// E_t[sigma^2(s)] given sigma^2(t).
double expected_variance(const ModelSpec& model, double t, double s, double sigma_t_sq);

/// v(t) = sqrt((1/(T-t)) int_t^T E_t[sigma^2(s)] ds), floored at kVolFloor.
double v_projection(const ModelSpec& model, double t, double T, double sigma_t_sq);

/// d/dt of v^2(t) with sigma^2 frozen (horizontal derivative of the projection).
double projection_time_derivative(const ModelSpec& model, double t, double T, double sigma_t_sq);

/// Density of d[W,M] with M(t) = int_0^T E_t[sigma^2(s)] ds.
double qv_wm_density(const ModelSpec& model, double t, double T, double sigma_t);

/// Density of d[M,M] (= qv_wm_density^2).
double qv_mm_density(const ModelSpec& model, double t, double T, double sigma_t);

/// Which closed form to use for the SABR Malliavin derivative D_u sigma^2(r).
enum class SabrMalliavinForm {
    ChainRule,  ///< 2*alpha*sigma^2(r)
    AsPrinted,  ///< 2*alpha*sigma^2(u)
};

/// Pathwise D^W_u sigma^2(r) at grid indices u_idx <= r_idx.
double malliavin_dsigma2(const ModelSpec& model, const PathView& path, std::size_t u_idx,
                         std::size_t r_idx,
                         SabrMalliavinForm form = SabrMalliavinForm::ChainRule);

/// out[j] = int_{u_j}^T D_{u_j} sigma^2(r) dr as a left-endpoint sum over the
/// grid, for j = 0..n_steps-1. One backward pass per path.
void malliavin_tail_integrals(const ModelSpec& model, const PathView& path, std::span<double> out,
                              SabrMalliavinForm form = SabrMalliavinForm::ChainRule);

}  // namespace svdecomp
