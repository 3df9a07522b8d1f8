#include "svdecomp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

namespace svdecomp {

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

namespace {

/// Uniform in the open interval (0, 1) from 64 random bits.
double open_uniform(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

NormalPair counter_normals(std::uint64_t seed, std::uint64_t path, std::uint64_t fine_step) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(path),
                                  static_cast<std::uint32_t>(path >> 32),
                                  static_cast<std::uint32_t>(fine_step),
                                  static_cast<std::uint32_t>(fine_step >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                              static_cast<std::uint32_t>(seed >> 32)};
    const auto x = Philox4x32::generate(ctr, key);
    // Box-Muller
    const double radius = std::sqrt(-2.0 * std::log(open_uniform(x[0], x[1])));
    const double angle = 2.0 * std::numbers::pi * open_uniform(x[2], x[3]);
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

void SimConfig::validate() const {
    if (n_paths < 2) throw ConfigError("n_paths must be >= 2");
    if (n_steps < 2) throw ConfigError("n_steps must be >= 2");
    if (rng_substeps < 1) throw ConfigError("rng_substeps must be >= 1");
    if (antithetic && (n_paths % 2 != 0 || n_paths < 4)) {
        throw ConfigError("antithetic sampling needs an even n_paths >= 4");
    }
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

void simulate_path(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg,
                   std::size_t path_index, const PathSpan& out) {
    const std::size_t n = cfg.n_steps;
    const std::size_t m = cfg.rng_substeps;
    const double dt = market.tau() / static_cast<double>(n);
    const double sub_sd = std::sqrt(dt / static_cast<double>(m));
    const std::uint64_t stream = cfg.antithetic ? path_index / 2 : path_index;
    const double sign = (cfg.antithetic && path_index % 2 == 1) ? -1.0 : 1.0;

    const double rho = model.rho();
    const double rho_bar = std::sqrt(1.0 - rho * rho);
    const double r = market.rate;
    const bool log_euler = cfg.scheme == PriceScheme::Auto && model.is_exponential();
    const ModelKind kind = model.kind();

    double S = market.spot;
    double var = model.initial_variance();
    double vol = std::sqrt(var);  // SABR carries sigma itself

    out.S[0] = S;
    out.sigma_sq[0] = var;
    for (std::size_t i = 0; i < n; ++i) {
        double zw = 0.0;
        double zb = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const auto z = counter_normals(cfg.seed, stream, i * m + j);
            zw += z.w;
            zb += z.b;
        }
        const double dW = sign * sub_sd * zw;
        const double dB = sign * sub_sd * zb;
        out.dW[i] = dW;
        out.dB[i] = dB;

        const double sig = (kind == ModelKind::SABR) ? vol : std::sqrt(std::max(var, 0.0));
        const double dZ = rho * dW + rho_bar * dB;
        if (log_euler) {
            S *= std::exp((r - 0.5 * sig * sig) * dt + sig * dZ);
        } else {
            S = std::max(S + r * S * dt + model.diffusion(S, sig) * dZ, kSpotFloor);
        }

        switch (kind) {
            case ModelKind::Heston: {
                const auto& p = model.heston_params();
                const double vp = std::max(var, 0.0);
                var = std::max(var + p.k * (p.theta_bar - vp) * dt + p.nu * std::sqrt(vp) * dW, 0.0);
                break;
            }
            case ModelKind::SABR: {
                const double a = model.sabr_params().alpha;
                vol *= std::exp(a * dW - 0.5 * a * a * dt);
                var = vol * vol;
                break;
            }
            case ModelKind::BlackScholes:
            case ModelKind::CEV: break;
        }

        if (!std::isfinite(S) || !std::isfinite(var)) {
            std::ostringstream os;
            os << "non-finite state on path " << path_index << " at step " << i + 1
               << " (S=" << S << ", sigma^2=" << var << ")";
            throw SimulationError(os.str());
        }
        out.S[i + 1] = S;
        out.sigma_sq[i + 1] = var;
    }
}

PathBundle simulate(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg) {
    cfg.validate();
    market.validate();
    PathBundle bundle(cfg.n_paths, cfg.n_steps, market.tau(), cfg.seed);
    parallel_for_blocks(cfg.n_paths, cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) simulate_path(model, market, cfg, p, bundle.mutable_path(p));
    });
    return bundle;
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 32) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

Estimate mc_mean_se(std::span<const double> samples, bool antithetic_pairs) {
    if (antithetic_pairs) {
        if (samples.size() % 2 != 0 || samples.size() < 4) {
            throw std::invalid_argument("mc_mean_se: antithetic pairing needs an even count >= 4");
        }
        std::vector<double> pairs(samples.size() / 2);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            pairs[i] = 0.5 * (samples[2 * i] + samples[2 * i + 1]);
        }
        return mc_mean_se(pairs, false);
    }
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("mc_mean_se: need at least 2 samples");
    const double mean = pairwise_sum(samples) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = samples[i] - mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

void parallel_for_blocks(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        fn(0, n);
        return;
    }
    const std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        const std::size_t begin = std::min(n, w * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        workers.emplace_back([&, w, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::size_t resolve_thread_count(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SVDECOMP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
        throw ConfigError("SVDECOMP_THREADS must be a positive integer");
    }
    return 1;
}

}  // namespace svdecomp
