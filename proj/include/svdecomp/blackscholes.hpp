#pragma once

#include <stdexcept>
#include <string>

namespace svdecomp {

/// Raised when a quantity needs sigma*sqrt(tau) > 0 but gets zero.
class DegenerateInputsError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Price outside the open no-arbitrage band (intrinsic, spot).
class OutOfBandPriceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, double lo, double hi)
        : std::runtime_error(what), bracket_lo(lo), bracket_hi(hi) {}
    double bracket_lo;
    double bracket_hi;
};

/// Contract and market state without a volatility.
struct OptionPoint {
    double t = 0.0;   ///< valuation time (years)
    double S = 0.0;   ///< spot
    double K = 0.0;   ///< strike
    double r = 0.0;   ///< continuously compounded rate
    double T = 0.0;   ///< maturity (years)

    double tau() const { return T - t; }
};

/// Black-Scholes evaluation point for a vanilla call.
struct BsPoint {
    double t = 0.0;
    double S = 0.0;
    double sigma = 0.0;
    double K = 0.0;
    double r = 0.0;
    double T = 0.0;

    double tau() const { return T - t; }

    static BsPoint at(const OptionPoint& p, double sigma) {
        return BsPoint{p.t, p.S, sigma, p.K, p.r, p.T};
    }
};

/// Standard normal cumulative distribution, via erfc.
double norm_cdf(double x);
/// Standard normal density.
double norm_pdf(double x);

struct DPlusMinus {
    double plus;
    double minus;
};

DPlusMinus d_pm(const BsPoint& p);

/// Call price S*Phi(d+) - K*exp(-r*tau)*Phi(d-). Exact intrinsic branch when
/// sigma*sqrt(tau) = 0.
double bs_price(const BsPoint& p);
double bs_delta(const BsPoint& p);
double bs_gamma(const BsPoint& p);
double bs_vega(const BsPoint& p);

/// G = S^2 d^2BS/dS^2, H = S dG/dS, K = S^2 d^2G/dS^2, evaluated together.
///
/// With s = sigma*sqrt(tau):
///   G = S*phi(d+)/s,   H = -G*d-/s,   K = G*(d+*d- - 1)/s^2.
struct GreekOperators {
    double G;
    double H;
    double K;
};

GreekOperators bs_operators(const BsPoint& p);

/// Same as bs_operators, with ln(S/K) and sqrt(tau) supplied by the caller.
/// Requires sigma > 0 and tau > 0.
GreekOperators bs_operators_logm(double S, double log_moneyness, double sigma, double r,
                                 double tau, double sqrt_tau);

double op_G(const BsPoint& p);
double op_H(const BsPoint& p);
double op_K(const BsPoint& p);

/// L = theta / S.
double op_L(double theta_val, double S);

/// dBS/dsigma - S^2*sigma*tau*d^2BS/dS^2, both from closed forms.
double vega_gamma_identity_residual(const BsPoint& p);

struct ImpliedVolOptions {
    double lo = 1e-6;
    double hi = 5.0;
    int max_iterations = 200;
    double price_tol_rel = 1e-10;   ///< |BS(sigma) - price| <= tol * S
    double sigma_tol = 1e-15;
};

/// Safeguarded Newton inside a bisection bracket.
double implied_vol(double price, const OptionPoint& p, const ImpliedVolOptions& opts = {});

}  // namespace svdecomp
