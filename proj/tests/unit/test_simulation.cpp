#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "svdecomp/blackscholes.hpp"
#include "svdecomp/simulation.hpp"

using namespace svdecomp;

namespace {

SimConfig small(std::size_t paths = 2000, std::size_t steps = 50) {
    SimConfig c;
    c.n_paths = paths;
    c.n_steps = steps;
    return c;
}

const MarketSpec kMarket{100.0, 100.0, 0.02, 1.0};

}  // namespace

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerZero) {
    const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    const Philox4x32::Counter expected{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u};
    EXPECT_EQ(out, expected);
}

TEST(Philox, KnownAnswerPi) {
    const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                          {0xa4093822u, 0x299f31d0u});
    const Philox4x32::Counter expected{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u};
    EXPECT_EQ(out, expected);
}

TEST(CounterNormals, MomentsAndIndependence) {
    const int n = 200000;
    double sw = 0, sb = 0, sww = 0, sbb = 0, swb = 0;
    for (int i = 0; i < n; ++i) {
        const auto z = counter_normals(9, static_cast<std::uint64_t>(i / 100), static_cast<std::uint64_t>(i % 100));
        sw += z.w;
        sb += z.b;
        sww += z.w * z.w;
        sbb += z.b * z.b;
        swb += z.w * z.b;
    }
    const double tol = 5.0 / std::sqrt(static_cast<double>(n));
    EXPECT_NEAR(sw / n, 0.0, tol);
    EXPECT_NEAR(sb / n, 0.0, tol);
    EXPECT_NEAR(sww / n, 1.0, 2 * tol);
    EXPECT_NEAR(sbb / n, 1.0, 2 * tol);
    EXPECT_NEAR(swb / n, 0.0, tol);
}

TEST(CounterNormals, AddressedNotSequential) {
    const auto a = counter_normals(1, 7, 3);
    (void)counter_normals(1, 0, 0);
    const auto b = counter_normals(1, 7, 3);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.b, b.b);
    EXPECT_NE(counter_normals(2, 7, 3).w, a.w);
}

TEST(SimConfig, Validation) {
    SimConfig c = small();
    c.n_paths = 1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small();
    c.n_steps = 1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small();
    c.antithetic = true;
    c.n_paths = 7;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small();
    c.threads = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Simulate, ThreadCountDoesNotChangePaths) {
    const auto m = ModelSpec::heston({2.0, 0.04, 0.3, 0.04}, -0.7);
    SimConfig c = small(501, 20);
    const auto one = simulate(m, kMarket, c);
    for (std::size_t t : {2u, 3u, 8u}) {
        c.threads = t;
        EXPECT_TRUE(simulate(m, kMarket, c) == one) << t << " threads";
    }
}

TEST(Simulate, SubstepsShareTheFinerBrownianPath) {
    const auto m = ModelSpec::sabr({0.5, 0.8, 0.2}, -0.3);
    SimConfig coarse = small(8, 25);
    coarse.rng_substeps = 2;
    SimConfig fine = small(8, 50);
    const auto a = simulate(m, kMarket, coarse);
    const auto b = simulate(m, kMarket, fine);
    for (std::size_t p = 0; p < 8; ++p) {
        const auto pa = a.path(p);
        const auto pb = b.path(p);
        for (std::size_t i = 0; i < 25; ++i) {
            EXPECT_NEAR(pa.dW[i], pb.dW[2 * i] + pb.dW[2 * i + 1], 1e-15);
            EXPECT_NEAR(pa.dB[i], pb.dB[2 * i] + pb.dB[2 * i + 1], 1e-15);
        }
    }
}

TEST(Simulate, AntitheticPairsNegateIncrements) {
    const auto m = ModelSpec::heston({2.0, 0.04, 0.3, 0.04}, -0.7);
    SimConfig c = small(10, 30);
    c.antithetic = true;
    const auto b = simulate(m, kMarket, c);
    for (std::size_t p = 0; p < 10; p += 2) {
        for (std::size_t i = 0; i < 30; ++i) {
            EXPECT_EQ(b.path(p).dW[i], -b.path(p + 1).dW[i]);
            EXPECT_EQ(b.path(p).dB[i], -b.path(p + 1).dB[i]);
        }
    }
    c.antithetic = false;
    const auto plain = simulate(m, kMarket, c);
    EXPECT_EQ(plain.path(0).dW[0], b.path(0).dW[0]);
    EXPECT_EQ(plain.path(1).dW[0], b.path(2).dW[0]);
}

TEST(Simulate, BlackScholesIsMartingaleAndPricesCorrectly) {
    const auto m = ModelSpec::black_scholes({0.25});
    const SimConfig c = small(40000, 10);
    const auto b = simulate(m, kMarket, c);
    std::vector<double> disc(c.n_paths), pay(c.n_paths);
    const double df = std::exp(-kMarket.rate * kMarket.expiry);
    for (std::size_t p = 0; p < c.n_paths; ++p) {
        const double ST = b.path(p).S.back();
        disc[p] = df * ST;
        pay[p] = df * std::max(ST - kMarket.strike, 0.0);
    }
    const auto fwd = mc_mean_se(disc);
    EXPECT_NEAR(fwd.estimate, kMarket.spot, 3.0 * fwd.std_error);
    const auto price = mc_mean_se(pay);
    const double bs = bs_price(BsPoint{0.0, 100.0, 0.25, 100.0, 0.02, 1.0});
    EXPECT_NEAR(price.estimate, bs, 3.0 * price.std_error);
    for (std::size_t p = 0; p < 5; ++p) {
        for (double x : b.path(p).sigma_sq) EXPECT_EQ(x, 0.0625);
    }
}

TEST(Simulate, HestonVarianceNonNegativeWithRightMean) {
    const HestonParams hp{1.5, 0.04, 0.34, 0.06};
    const auto m = ModelSpec::heston(hp, -0.5);
    const SimConfig c = small(20000, 100);
    const auto b = simulate(m, kMarket, c);
    std::vector<double> last(c.n_paths);
    for (std::size_t p = 0; p < c.n_paths; ++p) {
        for (double x : b.path(p).sigma_sq) ASSERT_GE(x, 0.0);
        last[p] = b.path(p).sigma_sq.back();
    }
    const auto e = mc_mean_se(last);
    const double ev = expected_variance(m, 0.0, 1.0, hp.sigma0_sq);
    EXPECT_NEAR(e.estimate, ev, 3.0 * e.std_error + 2e-4);
}

TEST(Simulate, SabrVarianceGrowsAtExactRate) {
    const auto m = ModelSpec::sabr({0.4, 1.0, 0.2}, 0.0);
    const SimConfig c = small(40000, 8);
    const auto b = simulate(m, kMarket, c);
    std::vector<double> last(c.n_paths);
    for (std::size_t p = 0; p < c.n_paths; ++p) last[p] = b.path(p).sigma_sq.back();
    const auto e = mc_mean_se(last);
    EXPECT_NEAR(e.estimate, 0.04 * std::exp(0.16), 3.0 * e.std_error);
}

TEST(Simulate, CevEulerStaysPositive) {
    const auto m = ModelSpec::cev({3.0, 0.5});
    const auto b = simulate(m, kMarket, small(1000, 50));
    for (double s : b.S()) EXPECT_GT(s, 0.0);
}

TEST(McMeanSe, KnownValues) {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    const auto e = mc_mean_se(x);
    EXPECT_DOUBLE_EQ(e.estimate, 2.5);
    EXPECT_NEAR(e.std_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
    const auto a = mc_mean_se(x, true);
    EXPECT_DOUBLE_EQ(a.estimate, 2.5);
    EXPECT_NEAR(a.std_error, std::sqrt(2.0 / 2.0), 1e-15);  // pair means 1.5, 3.5
}

TEST(McMeanSe, RejectsTooFewSamples) {
    const std::vector<double> one{1.0};
    EXPECT_THROW(mc_mean_se(one), std::invalid_argument);
    const std::vector<double> odd{1.0, 2.0, 3.0, 4.0, 5.0};
    EXPECT_THROW(mc_mean_se(odd, true), std::invalid_argument);
}

TEST(PairwiseSum, ExactOnIntegers) {
    std::vector<double> v(100001);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    EXPECT_EQ(pairwise_sum(v), 100000.0 * 100001.0 / 2.0);
}

TEST(ParallelForBlocks, CoversRangeAndRethrows) {
    std::vector<int> hit(1000, 0);
    parallel_for_blocks(hit.size(), 4, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) ++hit[i];
    });
    for (int h : hit) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for_blocks(10, 3, [](std::size_t, std::size_t) { throw std::runtime_error("x"); }),
                 std::runtime_error);
}

TEST(ResolveThreads, ExplicitEnvironmentDefault) {
    EXPECT_EQ(resolve_thread_count(3), 3u);
    setenv("SVDECOMP_THREADS", "5", 1);
    EXPECT_EQ(resolve_thread_count(0), 5u);
    setenv("SVDECOMP_THREADS", "abc", 1);
    EXPECT_THROW(resolve_thread_count(0), ConfigError);
    unsetenv("SVDECOMP_THREADS");
    EXPECT_EQ(resolve_thread_count(0), 1u);
}

TEST(PathBundle, BinaryRoundTrip) {
    const auto m = ModelSpec::sabr({0.5, 0.8, 0.2}, -0.3);
    const auto b = simulate(m, kMarket, small(6, 12));
    std::stringstream buf;
    write_path_bundle(buf, b);
    const auto back = read_path_bundle(buf);
    EXPECT_TRUE(back == b);
    EXPECT_EQ(back.n_paths(), 6u);
    EXPECT_EQ(back.n_steps(), 12u);
    EXPECT_EQ(back.seed(), b.seed());
}

TEST(PathBundle, RejectsBadInput) {
    std::stringstream junk("not a bundle at all");
    EXPECT_THROW(read_path_bundle(junk), std::runtime_error);
    const auto b = simulate(ModelSpec::black_scholes({0.2}), kMarket, small(4, 4));
    std::stringstream buf;
    write_path_bundle(buf, b);
    std::string s = buf.str();
    s.resize(s.size() - 8);
    std::stringstream cut(s);
    EXPECT_THROW(read_path_bundle(cut), std::runtime_error);
}
