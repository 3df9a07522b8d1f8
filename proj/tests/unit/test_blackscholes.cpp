#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "svdecomp/blackscholes.hpp"
#include "svdecomp/models.hpp"
#include "svdecomp/oracles.hpp"

using namespace svdecomp;

namespace {

BsPoint atm(double sigma = 0.2, double r = 0.0) { return BsPoint{0.0, 100.0, sigma, 100.0, r, 1.0}; }

// Reference values below were computed with mpmath at 40 digits.

}  // namespace

TEST(DPlusMinus, AtTheMoneyZeroRate) {
    const auto d = d_pm(atm());
    EXPECT_NEAR(d.plus, 0.1, 1e-15);
    EXPECT_NEAR(d.minus, -0.1, 1e-15);
}

TEST(DPlusMinus, ForwardAtTheMoney) {
    const auto d = d_pm(atm(0.2, 0.02));
    EXPECT_NEAR(d.plus, 0.2, 1e-15);
    EXPECT_NEAR(d.minus, 0.0, 1e-15);
}

TEST(DPlusMinus, InTheMoneyReference) {
    const auto d = d_pm(BsPoint{0.0, 100.0, 0.3, 90.0, 0.05, 0.5});
    EXPECT_NEAR(d.plus, 0.7205913813154760, 1e-14);
    EXPECT_NEAR(d.minus, 0.5084593469595118, 1e-14);
}

TEST(DPlusMinus, DegenerateThrows) {
    EXPECT_THROW(d_pm(atm(0.0)), DegenerateInputsError);
    EXPECT_THROW(d_pm(BsPoint{1.0, 100.0, 0.2, 100.0, 0.0, 1.0}), DegenerateInputsError);
}

TEST(BsPrice, AtTheMoneyReference) {
    EXPECT_NEAR(bs_price(atm()), 7.965567455405796, 1e-12);
}

TEST(BsPrice, ExpiryIsIntrinsic) {
    EXPECT_EQ(bs_price(BsPoint{1.0, 110.0, 0.2, 100.0, 0.0, 1.0}), 10.0);
    EXPECT_EQ(bs_price(BsPoint{1.0, 90.0, 0.2, 100.0, 0.0, 1.0}), 0.0);
}

TEST(BsPrice, ZeroVolIsDiscountedForwardIntrinsic) {
    EXPECT_NEAR(bs_price(atm(0.0, 0.02)), 1.980132669324470, 1e-13);
}

TEST(BsPrice, MatchesLognormalQuadrature) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> S(50.0, 200.0), sig(0.05, 1.0), r(-0.02, 0.08), tau(0.01, 3.0);
    for (int i = 0; i < 200; ++i) {
        const BsPoint p{0.0, S(rng), sig(rng), 100.0, r(rng), tau(rng)};
        const double q = lognormal_quadrature_price(p.S, p.K, p.r, p.sigma, p.T);
        EXPECT_NEAR(bs_price(p), q, 1e-9 * p.S) << "S=" << p.S << " sigma=" << p.sigma << " tau=" << p.T;
    }
}

TEST(BsPrice, InsideNoArbitrageBand) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> S(50.0, 200.0), sig(0.05, 1.0), r(-0.02, 0.08), tau(0.01, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const BsPoint p{0.0, S(rng), sig(rng), 100.0, r(rng), tau(rng)};
        const double c = bs_price(p);
        const double intrinsic = std::max(p.S - p.K * std::exp(-p.r * p.T), 0.0);
        EXPECT_GE(c, intrinsic - 1e-12 * p.S);
        EXPECT_LE(c, p.S);
    }
}

TEST(BsPrice, IncreasingInSigma) {
    double prev = bs_price(atm(0.01));
    for (double s = 0.02; s <= 2.0; s += 0.01) {
        const double c = bs_price(atm(s));
        EXPECT_GT(c, prev);
        prev = c;
    }
}

TEST(Operators, GReference) {
    EXPECT_NEAR(op_G(atm()), 198.47627373850588, 1e-11);
    EXPECT_NEAR(op_G(atm()), 100.0 * norm_pdf(0.1) / 0.2, 1e-11);
}

TEST(Operators, GIsScaledGamma) {
    const BsPoint p{0.0, 120.0, 0.25, 100.0, 0.01, 0.8};
    EXPECT_NEAR(op_G(p), p.S * p.S * bs_gamma(p), 1e-12 * op_G(p));
}

TEST(Operators, HAndKMatchFiniteDifferences) {
    for (double S : {80.0, 100.0, 125.0}) {
        const BsPoint p{0.0, S, 0.3, 100.0, 0.02, 0.7};
        const double h = 1e-4 * S;
        auto G = [&](double s) {
            BsPoint q = p;
            q.S = s;
            return op_G(q);
        };
        const double dG = (G(S - 2 * h) - 8 * G(S - h) + 8 * G(S + h) - G(S + 2 * h)) / (12 * h);
        const double d2G = (-G(S - 2 * h) + 16 * G(S - h) - 30 * G(S) + 16 * G(S + h) - G(S + 2 * h)) / (12 * h * h);
        const auto ops = bs_operators(p);
        EXPECT_NEAR(ops.H, S * dG, 1e-6 * std::abs(ops.G));
        EXPECT_NEAR(ops.K, S * S * d2G, 1e-5 * std::abs(ops.G));
    }
}

TEST(Operators, ClosedFormsAgree) {
    const BsPoint p{0.0, 90.0, 0.4, 100.0, 0.03, 2.0};
    const auto ops = bs_operators(p);
    const auto d = d_pm(p);
    const double s = 0.4 * std::sqrt(2.0);
    EXPECT_DOUBLE_EQ(ops.G, op_G(p));
    EXPECT_NEAR(ops.H, -ops.G * d.minus / s, 1e-12 * ops.G);
    EXPECT_NEAR(ops.K, ops.G * (d.plus * d.minus - 1.0) / (s * s), 1e-12 * ops.G);
    const auto lm = bs_operators_logm(p.S, std::log(p.S / p.K), p.sigma, p.r, p.T, std::sqrt(p.T));
    EXPECT_NEAR(lm.G, ops.G, 1e-13 * ops.G);
    EXPECT_NEAR(lm.H, ops.H, 1e-13 * ops.G);
    EXPECT_NEAR(lm.K, ops.K, 1e-13 * ops.G);
}

TEST(Operators, DegenerateThrows) {
    EXPECT_THROW(op_G(atm(0.0)), DegenerateInputsError);
    EXPECT_THROW(op_H(atm(0.0)), DegenerateInputsError);
    EXPECT_THROW(op_K(atm(0.0)), DegenerateInputsError);
}

TEST(Operators, LReference) {
    EXPECT_DOUBLE_EQ(op_L(30.0, 100.0), 0.3);
    EXPECT_EQ(ModelSpec::black_scholes({0.2}).normalized_diffusion(100.0, 0.2), 0.2);
    EXPECT_NEAR(ModelSpec::cev({0.2, 0.8}).normalized_diffusion(100.0, 0.2), 0.07962143411069945, 1e-16);
}

TEST(VegaGamma, IdentityHoldsOnSpecRegion) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> S(50.0, 200.0), sig(0.05, 1.0), r(-0.02, 0.08), tau(0.01, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const BsPoint p{0.0, S(rng), sig(rng), 100.0, r(rng), tau(rng)};
        EXPECT_LE(std::abs(vega_gamma_identity_residual(p)), 1e-10 * std::max(1.0, bs_vega(p)));
    }
}

TEST(ImpliedVol, RoundTripReference) {
    const OptionPoint p{0.0, 100.0, 100.0, 0.0, 1.0};
    EXPECT_NEAR(implied_vol(7.965567455405796, p), 0.2, 1e-12);
}

TEST(ImpliedVol, RoundTripAcrossGrid) {
    for (double S : {70.0, 100.0, 140.0}) {
        for (double sigma : {0.05, 0.2, 0.6, 1.2}) {
            for (double tau : {0.1, 1.0, 3.0}) {
                const OptionPoint p{0.0, S, 100.0, 0.02, tau};
                const auto d = d_pm(BsPoint::at(p, sigma));
                if (std::abs(d.plus) > 4.0 || std::abs(d.minus) > 4.0) continue;
                const double c = bs_price(BsPoint::at(p, sigma));
                EXPECT_NEAR(implied_vol(c, p), sigma, 1e-8) << S << ' ' << sigma << ' ' << tau;
            }
        }
    }
}

TEST(ImpliedVol, OutOfBandThrows) {
    const OptionPoint p{0.0, 100.0, 90.0, 0.0, 1.0};
    EXPECT_THROW(implied_vol(9.0, p), OutOfBandPriceError);
    EXPECT_THROW(implied_vol(100.0, p), OutOfBandPriceError);
    EXPECT_THROW(implied_vol(150.0, p), OutOfBandPriceError);
}

TEST(ImpliedVol, MonotoneInPrice) {
    const OptionPoint p{0.0, 100.0, 100.0, 0.01, 1.0};
    double prev = 0.0;
    for (double c = 2.0; c < 40.0; c += 0.5) {
        const double iv = implied_vol(c, p);
        EXPECT_GT(iv, prev);
        prev = iv;
    }
}
