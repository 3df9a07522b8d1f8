#include "svdecomp/blackscholes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace svdecomp {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;  // 1/sqrt(2*pi)

double total_stdev(const BsPoint& p) { return p.sigma * std::sqrt(p.tau()); }

void require_positive_stdev(const BsPoint& p, const char* who) {
    if (!(p.tau() > 0.0) || !(p.sigma > 0.0)) {
        std::ostringstream os;
        os << who << ": sigma*sqrt(tau) must be > 0 (sigma=" << p.sigma << ", tau=" << p.tau()
           << ")";
        throw DegenerateInputsError(os.str());
    }
}

double intrinsic(const BsPoint& p) {
    return std::max(p.S - p.K * std::exp(-p.r * p.tau()), 0.0);
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5); }

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

DPlusMinus d_pm(const BsPoint& p) {
    require_positive_stdev(p, "d_pm");
    const double s = total_stdev(p);
    const double dp = (std::log(p.S / p.K) + (p.r + 0.5 * p.sigma * p.sigma) * p.tau()) / s;
    return {dp, dp - s};
}

double bs_price(const BsPoint& p) {
    if (p.tau() <= 0.0 || p.sigma <= 0.0) return intrinsic(p);
    const auto d = d_pm(p);
    return p.S * norm_cdf(d.plus) - p.K * std::exp(-p.r * p.tau()) * norm_cdf(d.minus);
}

double bs_delta(const BsPoint& p) {
    if (p.tau() <= 0.0 || p.sigma <= 0.0) {
        return p.S > p.K * std::exp(-p.r * std::max(p.tau(), 0.0)) ? 1.0 : 0.0;
    }
    return norm_cdf(d_pm(p).plus);
}

double bs_gamma(const BsPoint& p) {
    const auto d = d_pm(p);
    return norm_pdf(d.plus) / (p.S * total_stdev(p));
}

double bs_vega(const BsPoint& p) {
    if (p.tau() <= 0.0 || p.sigma <= 0.0) return 0.0;
    const auto d = d_pm(p);
    return p.S * norm_pdf(d.plus) * std::sqrt(p.tau());
}

GreekOperators bs_operators_logm(double S, double log_moneyness, double sigma, double r,
                                 double tau, double sqrt_tau) {
    const double s = sigma * sqrt_tau;
    const double dp = (log_moneyness + (r + 0.5 * sigma * sigma) * tau) / s;
    const double dm = dp - s;
    const double G = S * norm_pdf(dp) / s;
    return {G, -G * dm / s, G * (dp * dm - 1.0) / (s * s)};
}

GreekOperators bs_operators(const BsPoint& p) {
    require_positive_stdev(p, "bs_operators");
    return bs_operators_logm(p.S, std::log(p.S / p.K), p.sigma, p.r, p.tau(), std::sqrt(p.tau()));
}

double op_G(const BsPoint& p) { return bs_operators(p).G; }
double op_H(const BsPoint& p) { return bs_operators(p).H; }
double op_K(const BsPoint& p) { return bs_operators(p).K; }

double op_L(double theta_val, double S) { return theta_val / S; }

double vega_gamma_identity_residual(const BsPoint& p) {
    require_positive_stdev(p, "vega_gamma_identity_residual");
    return bs_vega(p) - p.S * p.S * p.sigma * p.tau() * bs_gamma(p);
}

double implied_vol(double price, const OptionPoint& q, const ImpliedVolOptions& opts) {
    if (!(q.tau() > 0.0)) throw DegenerateInputsError("implied_vol: tau must be > 0");
    const double lower_band = std::max(q.S - q.K * std::exp(-q.r * q.tau()), 0.0);
    if (!(price > lower_band) || !(price < q.S)) {
        std::ostringstream os;
        os.precision(17);
        os << "implied_vol: price " << price << " outside no-arbitrage band (" << lower_band
           << ", " << q.S << ")";
        throw OutOfBandPriceError(os.str());
    }

    auto value = [&](double sigma) { return bs_price(BsPoint::at(q, sigma)) - price; };
    const double tol = opts.price_tol_rel * q.S;

    double lo = opts.lo;
    double hi = opts.hi;
    // Prices hugging the band edges may sit outside the default bracket.
    while (value(lo) > 0.0 && lo > 1e-300) lo *= 1e-3;
    while (value(hi) < 0.0 && hi < 1e3) hi *= 2.0;
    if (value(lo) > tol || value(hi) < -tol) {
        throw NonConvergenceError("implied_vol: price not bracketed", lo, hi);
    }

    const double fwd_moneyness = std::log(q.S / q.K) + q.r * q.tau();
    double x = std::sqrt(2.0 * std::abs(fwd_moneyness) / q.tau());
    if (!(x > lo && x < hi)) x = std::clamp(0.2, lo, hi);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);

    for (int it = 0; it < opts.max_iterations; ++it) {
        const double f = value(x);
        if (f > 0.0) hi = x; else lo = x;
        if (std::abs(f) <= 1e-15 * q.S) return x;

        const double vega = bs_vega(BsPoint::at(q, x));
        double next = (vega > 0.0) ? x - f / vega : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);

        if (std::abs(next - x) <= opts.sigma_tol * std::max(1.0, x) || hi - lo <= opts.sigma_tol * hi) {
            if (std::abs(value(next)) <= tol) return next;
            break;
        }
        x = next;
    }
    if (std::abs(value(x)) <= tol) return x;
    throw NonConvergenceError("implied_vol: no convergence within iteration cap", lo, hi);
}

}  // namespace svdecomp
