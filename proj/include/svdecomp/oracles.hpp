#pragma once

#include <stdexcept>

#include "svdecomp/models.hpp"

namespace svdecomp {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Composite 20-point Gauss-Legendre rule. The result is accepted once
/// doubling the panel count changes it by less than target_rel_error.
struct QuadratureSpec {
    int panels = 32;
    /// Upper truncation of the integration variable; 0 picks a default
    /// (Heston: first u where the integrand is negligible, lognormal: 12
    /// standard deviations past the density peak).
    double truncation = 0.0;
    double target_rel_error = 1e-10;  ///< must be <= 1e-6
    int max_doublings = 8;

    int nodes() const { return 20 * panels; }
    void validate() const;
};

/// Heston call price from the characteristic function (single-integral
/// Lewis form with branch-cut-stable "little trap" coefficients).
///
/// Self-check: the put obtained from an independent P1/P2 evaluation must
/// satisfy put-call parity against the Lewis call to 1e-8*S, otherwise
/// QuadratureError.
double heston_cf_price(const HestonParams& params, const MarketSpec& market, double rho,
                       const QuadratureSpec& q = {});

/// Call price by integrating the lognormal payoff against the standard
/// normal density from the exercise boundary upward. Intrinsic value when
/// sigma*sqrt(tau) = 0.
double lognormal_quadrature_price(double S, double K, double r, double sigma, double tau,
                                  const QuadratureSpec& q = {});

}  // namespace svdecomp
