#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "svdecomp/models.hpp"
#include "svdecomp/path_bundle.hpp"

namespace svdecomp {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key);
};

/// Independent N(0,1) draws for the W and B streams, addressed by
/// (seed, path, fine step). Draws do not depend on execution order.
struct NormalPair {
    double w;
    double b;
};

NormalPair counter_normals(std::uint64_t seed, std::uint64_t path, std::uint64_t fine_step);

enum class PriceScheme {
    Auto,   ///< log-Euler for exponential models, Euler otherwise
    Euler,  ///< plain Euler on S for every model
};

struct SimConfig {
    std::size_t n_paths = 100000;
    std::size_t n_steps = 200;
    std::uint64_t seed = 42;
    bool antithetic = false;
    PriceScheme scheme = PriceScheme::Auto;
    /// Each step increment is the sum of this many finer draws. A run with
    /// (n, 2) and one with (2n, 1) share the same Brownian path.
    std::size_t rng_substeps = 1;
    std::size_t threads = 1;

    void validate() const;
};

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Simulates path `path_index` into `out` (sized for cfg.n_steps).
void simulate_path(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg,
                   std::size_t path_index, const PathSpan& out);

/// All paths, deterministic in (model, market, cfg) and independent of cfg.threads.
PathBundle simulate(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg);

struct Estimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Sample mean and standard error. With `antithetic_pairs`, consecutive
/// pairs are averaged first and the pair means are the samples.
Estimate mc_mean_se(std::span<const double> samples, bool antithetic_pairs = false);

/// Pairwise summation; result independent of how the caller partitioned work.
double pairwise_sum(std::span<const double> values);

/// Splits [0, n) into contiguous blocks and runs fn(begin, end) on up to
/// `threads` workers. Exceptions from workers are rethrown.
void parallel_for_blocks(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t, std::size_t)>& fn);

/// Worker count from an explicit flag, else SVDECOMP_THREADS, else 1.
std::size_t resolve_thread_count(std::size_t requested);

}  // namespace svdecomp
