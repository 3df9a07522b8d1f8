#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "svdecomp/decomposition.hpp"
#include "svdecomp/models.hpp"
#include "svdecomp/simulation.hpp"

namespace svdecomp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

/// Everything one invocation needs, after flags and the optional config file
/// have been merged.
struct RunConfig {
    std::string subcommand;
    std::string model = "heston";
    double sigma = 0.2;
    double beta = 1.0;
    double k = 2.0;
    double theta = 0.04;
    double nu = 0.3;
    double v0 = 0.04;
    double alpha = 0.5;
    double sigma0 = 0.2;
    double rho = 0.0;
    MarketSpec market;
    SimConfig sim;
    std::string method = "all";     ///< decompose
    std::string variant = "both";   ///< ivslope
    std::string sabr_form = "chain";
    std::string out_path;           ///< empty: stdout
    std::string dump_paths;

    /// Builds and validates the model; throws ConfigError with the offending
    /// parameter named.
    ModelSpec build_model() const;
    std::string describe() const;
};

/// Runs one CLI invocation. CSV goes to `out` (or the --out file), the
/// resolved config and diagnostics to `log`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);
int run(int argc, char** argv);

}  // namespace svdecomp::cli
