#include "svdecomp/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "svdecomp/blackscholes.hpp"

namespace svdecomp {

using cplx = std::complex<double>;

void QuadratureSpec::validate() const {
    if (panels < 1) throw ConfigError("quadrature panels must be >= 1");
    if (truncation < 0.0) throw ConfigError("quadrature truncation must be >= 0");
    if (!(target_rel_error > 0.0 && target_rel_error <= 1e-6)) {
        throw ConfigError("quadrature target relative error must lie in (0, 1e-6]");
    }
    if (max_doublings < 1) throw ConfigError("quadrature max_doublings must be >= 1");
}

namespace {

template <class F>
double composite_gauss(const F& f, double a, double b, int panels) {
    const double w = (b - a) / panels;
    double sum = 0.0;
    for (int i = 0; i < panels; ++i) {
        sum += boost::math::quadrature::gauss<double, 20>::integrate(f, a + i * w, a + (i + 1) * w);
    }
    return sum;
}

/// Evaluates value(panels) with panel doubling until two successive results
/// agree to the target relative error.
template <class V>
double converge(const V& value, const QuadratureSpec& q, const char* who) {
    int panels = q.panels;
    double prev = value(panels);
    for (int i = 0; i < q.max_doublings; ++i) {
        panels *= 2;
        const double cur = value(panels);
        if (std::abs(cur - prev) <= q.target_rel_error * std::max(std::abs(cur), 1e-300) ||
            std::abs(cur - prev) <= 1e-15 * q.target_rel_error) {
            return cur;
        }
        prev = cur;
    }
    std::ostringstream os;
    os << who << ": no convergence after " << q.max_doublings << " panel doublings";
    throw QuadratureError(os.str());
}

/// log(1 + x) for complex x, accurate for small |x|.
cplx log1p_c(cplx x) {
    if (std::abs(x) < 1e-4) {
        return x * (1.0 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x)));
    }
    return std::log(1.0 + x);
}

/// E[exp(i z X)] with X = ln(S_T/F), z complex.
///
/// With b = k - rho*nu*i*z, d = sqrt(b^2 + nu^2 (i z + z^2)), g = (b-d)/(b+d):
///   D = (b-d)/nu^2 (1 - e^{-d tau})/(1 - g e^{-d tau})
///   C = k*theta*[(b-d)/nu^2 tau - 2/nu^2 log((1 - g e^{-d tau})/(1 - g))]
/// (b-d)/nu^2 = -(i z + z^2)/(b+d) avoids dividing by nu^2, so nu -> 0 is regular.
class HestonCf {
public:
    HestonCf(const HestonParams& p, double rho, double tau) : p_(p), rho_(rho), tau_(tau) {}

    cplx operator()(cplx z) const {
        const cplx I(0.0, 1.0);
        const double nu2 = p_.nu * p_.nu;
        const cplx a = I * z + z * z;
        const cplx b = p_.k - rho_ * p_.nu * I * z;
        const cplx d = std::sqrt(b * b + nu2 * a);
        const cplx bpd = b + d;
        const cplx bmd_over_nu2 = -a / bpd;
        const cplx e = std::exp(-d * tau_);
        const cplx one_minus_e = 1.0 - e;
        const cplx g = bmd_over_nu2 * nu2 / bpd;
        const cplx D = bmd_over_nu2 * one_minus_e / (1.0 - g * e);
        // log((1 - g e)/(1 - g)) = log1p(g (1 - e)/(1 - g)); divide by nu^2 via g/nu^2.
        const cplx x = g * one_minus_e / (1.0 - g);
        cplx log_term_over_nu2;
        if (nu2 > 0.0 && std::abs(x) >= 1e-4) {
            log_term_over_nu2 = std::log(1.0 + x) / nu2;
        } else {
            const cplx g_over_nu2 = bmd_over_nu2 / bpd;
            const cplx x_over_nu2 = g_over_nu2 * one_minus_e / (1.0 - g);
            // log1p(x)/nu^2 = (x/nu^2) * log1p(x)/x
            const cplx ratio = std::abs(x) > 0.0 ? log1p_c(x) / x : cplx(1.0);
            log_term_over_nu2 = x_over_nu2 * ratio;
        }
        const cplx C = p_.k * p_.theta_bar * (bmd_over_nu2 * tau_ - 2.0 * log_term_over_nu2);
        return std::exp(C + D * p_.sigma0_sq);
    }

private:
    HestonParams p_;
    double rho_;
    double tau_;
};

/// Smallest u (doubling from 8) where |integrand| * u falls below 1e-16.
template <class F>
double auto_truncation(const F& f) {
    double u = 8.0;
    while (u < 1e6 && std::abs(f(u)) * u > 1e-16) u *= 2.0;
    return u;
}

}  // namespace

double heston_cf_price(const HestonParams& params, const MarketSpec& market, double rho,
                       const QuadratureSpec& q) {
    q.validate();
    market.validate();
    if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("rho must lie in (-1, 1)");
    if (!(2.0 * params.k * params.theta_bar > params.nu * params.nu)) {
        throw ConfigError("Heston parameters violate the Feller condition 2*k*theta > nu^2");
    }
    const double tau = market.tau();
    const double S = market.spot;
    const double K = market.strike;
    const double disc = std::exp(-market.rate * tau);
    const double F = S / disc;
    const double k = std::log(F / K);
    const HestonCf phi(params, rho, tau);
    const cplx I(0.0, 1.0);

    // Lewis: C = e^{-r tau} [F - sqrt(FK)/pi int_0^inf Re(e^{iuk} phi(u - i/2))/(u^2 + 1/4) du]
    auto lewis = [&](double u) {
        return std::real(std::exp(I * u * k) * phi(cplx(u, -0.5))) / (u * u + 0.25);
    };
    const double u_max = q.truncation > 0.0 ? q.truncation : auto_truncation(lewis);
    const double call = converge(
        [&](int panels) {
            const double integral = composite_gauss(lewis, 0.0, u_max, panels);
            return disc * (F - std::sqrt(F * K) / std::numbers::pi * integral);
        },
        q, "heston_cf_price");

    // P_j = 1/2 + 1/pi int_0^inf Re(e^{iuk} phi_j(u)/(iu)) du, phi_1(u) = phi(u - i).
    auto p1 = [&](double u) { return std::real(std::exp(I * u * k) * phi(cplx(u, -1.0)) / (I * u)); };
    auto p2 = [&](double u) { return std::real(std::exp(I * u * k) * phi(cplx(u, 0.0)) / (I * u)); };
    const double u_max_p = q.truncation > 0.0 ? q.truncation : std::max(auto_truncation(p1), auto_truncation(p2));
    const double put = converge(
        [&](int panels) {
            const double P1 = 0.5 + composite_gauss(p1, 0.0, u_max_p, panels) / std::numbers::pi;
            const double P2 = 0.5 + composite_gauss(p2, 0.0, u_max_p, panels) / std::numbers::pi;
            return K * disc * (1.0 - P2) - S * (1.0 - P1);
        },
        q, "heston_cf_price (put)");

    const double parity = call - put - (S - K * disc);
    if (!(std::abs(parity) <= 1e-8 * S)) {
        std::ostringstream os;
        os.precision(17);
        os << "heston_cf_price: put-call parity residual " << parity << " exceeds 1e-8*S";
        throw QuadratureError(os.str());
    }
    return call;
}

double lognormal_quadrature_price(double S, double K, double r, double sigma, double tau,
                                  const QuadratureSpec& q) {
    q.validate();
    if (!(S > 0.0) || !(K > 0.0)) throw ConfigError("lognormal_quadrature_price: S and K must be > 0");
    const double disc = std::exp(-r * std::max(tau, 0.0));
    const double s = sigma * std::sqrt(std::max(tau, 0.0));
    if (!(s > 0.0)) return std::max(S - K * disc, 0.0);

    const double drift = (r - 0.5 * sigma * sigma) * tau;
    const double z_star = (std::log(K / S) - drift) / s;
    const double width = q.truncation > 0.0 ? q.truncation : 12.0;
    const double lo = std::max(z_star, std::min(0.0, s) - width);
    const double hi = std::max(z_star, s) + width;
    if (!(hi > lo)) return 0.0;
    auto payoff_density = [&](double z) { return (S * std::exp(drift + s * z) - K) * norm_pdf(z); };
    return converge([&](int panels) { return disc * composite_gauss(payoff_density, lo, hi, panels); }, q,
                    "lognormal_quadrature_price");
}

}  // namespace svdecomp
