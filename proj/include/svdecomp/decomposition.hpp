#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svdecomp/models.hpp"
#include "svdecomp/simulation.hpp"

namespace svdecomp {

enum class Method {
    Ito,          ///< BS at the adapted projection v plus three corrections
    Malliavin,    ///< BS at the average future volatility plus two corrections
    FunctionalV,  ///< functional-Ito terms with f = v
};

std::string to_string(Method m);

/// Correction-term labels as they appear in reports and CSV.
namespace labels {
inline constexpr std::string_view kDriftAdjust = "drift_adjust";
inline constexpr std::string_view kVomma = "vomma";
inline constexpr std::string_view kVanna = "vanna";
inline constexpr std::string_view kDtf = "dtf";
}  // namespace labels

struct TermEstimate {
    std::string label;
    Estimate value;
};

struct DecompositionReport {
    Method method = Method::Ito;
    Estimate leading;
    std::vector<TermEstimate> terms;
    /// leading + sum of terms, reduced per path.
    Estimate total;
    /// exp(-rT) (S_T - K)^+ on the same paths.
    Estimate lhs_price;
    /// lhs - total, reduced per path (same-path correlated error).
    Estimate identity_gap;
    /// Number of path-steps where the drift_adjust integrand is not exactly 0.
    std::uint64_t drift_nonzero_steps = 0;

    /// Term by label; zero estimate if the method has no such term.
    Estimate term(std::string_view label) const;
};

/// Non-anticipative volatility functional f(t, sigma^2_t) feeding the
/// functional-Ito decomposition.
class VolatilityFunctional {
public:
    virtual ~VolatilityFunctional() = default;
    virtual double value(double u, double sigma_sq) const = 0;
    /// Rate D_u f entering the f*tau*G*D_u f term: the dt-coefficient of f^2
    /// along the path divided by 2f.
    virtual double horizontal_derivative(double u, double sigma_sq) const = 0;
    /// Density of d[f,f] w.r.t. du.
    virtual double bracket_ff_density(double u, double sigma_sq) const = 0;
    /// Density of d[W,f] w.r.t. du.
    virtual double bracket_wf_density(double u, double sigma_sq) const = 0;
};

/// f = v, the adapted projection of the average future volatility.
///
/// From v^2(u)(T-u) = M(u) - int_0^u sigma^2 ds:
///   d(v^2) = ((v^2 - sigma^2) du + dM) / (T-u)
/// so d[W,v] = zeta/(2 v (T-u)) and d[v,v] = zeta^2/(4 v^2 (T-u)^2). The
/// dt-coefficient of v^2 is computed analytically as the horizontal derivative
/// of the closed-form projection plus its sigma^2-sensitivity times the
/// variance drift.
class ProjectedVolatility final : public VolatilityFunctional {
public:
    ProjectedVolatility(ModelSpec model, double horizon) : model_(std::move(model)), T_(horizon) {}

    double value(double u, double sigma_sq) const override;
    double horizontal_derivative(double u, double sigma_sq) const override;
    double bracket_ff_density(double u, double sigma_sq) const override;
    double bracket_wf_density(double u, double sigma_sq) const override;

    /// dt-coefficient of v^2; analytically (v^2 - sigma^2)/(T-u).
    double variance_rate(double u, double sigma_sq) const;

private:
    ModelSpec model_;
    double T_;
};

/// Quadrature for the du-integrals of the correction terms over the grid.
enum class TimeRule {
    /// Node weights dt*(1/2, 1, ..., 1, 3/2): trapezoid with the integrand at
    /// expiry replaced by its value at the last node. Second order in dt for
    /// the time dependence of the integrands.
    Trapezoid,
    /// Node weights dt*(1, ..., 1). First order in dt.
    LeftEndpoint,
};

struct DecompositionOptions {
    bool ito = true;
    bool malliavin = true;
    bool functional = true;
    SabrMalliavinForm sabr_form = SabrMalliavinForm::ChainRule;
    TimeRule time_rule = TimeRule::Trapezoid;
};

/// Per-path time integrals over the grid nodes u_0..u_{n-1}, discounting inside.
/// Integrands at node j use only the state at u_j.
struct PathTerms {
    double payoff = 0.0;  ///< exp(-rT)(S_T - K)^+
    double ito_drift = 0.0, ito_vomma = 0.0, ito_vanna = 0.0;
    double mal_leading = 0.0, mal_drift = 0.0, mal_vanna = 0.0;
    double fun_dtf = 0.0, fun_drift = 0.0, fun_vomma = 0.0, fun_vanna = 0.0;
    /// Sum over steps of the full correction integrand, accumulated apart from
    /// the per-term sums.
    double ito_correction = 0.0, mal_correction = 0.0;
    /// Sums of |integrand| over steps, used as rounding scales when
    /// comparing functional and Ito terms.
    double scale_drift = 0.0, scale_vomma = 0.0, scale_vanna = 0.0;
    /// Sum over steps of |drift| + |vanna| for the Malliavin terms.
    double scale_mal = 0.0;
    std::uint32_t ito_drift_nonzero = 0;
    std::uint32_t mal_drift_nonzero = 0;
};

/// Largest pathwise relative mismatch between functional (f = v) and Ito terms.
struct FunctionalMismatch {
    double drift = 0.0;  ///< (dtf + drift_adjust) vs Ito drift_adjust
    double vomma = 0.0;
    double vanna = 0.0;
    double total = 0.0;

    double max() const;
};

/// One pass over all paths computing every requested decomposition. Results
/// are independent of cfg.threads.
class DecompositionRun {
public:
    DecompositionRun(ModelSpec model, MarketSpec market, SimConfig cfg, DecompositionOptions options);

    const ModelSpec& model() const { return model_; }
    const MarketSpec& market() const { return market_; }
    const SimConfig& config() const { return cfg_; }
    const DecompositionOptions& options() const { return options_; }

    /// BS(0, S0, v(0)).
    double ito_leading() const { return ito_leading_; }
    /// BS(0, S0, f(0)) for the functional decomposition.
    double functional_leading() const { return functional_leading_; }
    std::span<const PathTerms> paths() const { return paths_; }

    DecompositionReport report(Method m) const;
    /// Per-path leading + corrections.
    std::vector<double> path_totals(Method m) const;
    /// Mean and standard error of total(a) - total(b) on shared paths.
    Estimate total_difference(Method a, Method b) const;
    FunctionalMismatch functional_mismatch() const;

    /// Mean/SE honouring antithetic pairing of the run.
    Estimate reduce(std::span<const double> per_path) const;

private:
    void require(Method m) const;

    ModelSpec model_;
    MarketSpec market_;
    SimConfig cfg_;
    DecompositionOptions options_;
    double ito_leading_ = 0.0;
    double functional_leading_ = 0.0;
    std::vector<PathTerms> paths_;
};

DecompositionReport ito_decompose(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg);
DecompositionReport malliavin_decompose(const ModelSpec& model, const MarketSpec& market,
                                        const SimConfig& cfg,
                                        SabrMalliavinForm form = SabrMalliavinForm::ChainRule);
DecompositionReport functional_decompose_v(const ModelSpec& model, const MarketSpec& market,
                                           const SimConfig& cfg);

/// Both sides of the rho = 0 relation between the two leading terms:
///   E[BS(sigma_bar) - BS(v)] = 1/2 E int (G(v) - G(sigma_bar))(L^2 - sigma^2) du
///                            + 1/8 E int K(v) d[M,M]
/// `rhs_as_printed` carries the opposite overall sign for comparison.
struct RhoZeroIdentity {
    Estimate lhs;
    Estimate rhs;
    Estimate rhs_as_printed;
    Estimate gap;             ///< lhs - rhs, per path
    Estimate gap_as_printed;  ///< lhs - rhs_as_printed, per path
};

RhoZeroIdentity rho_zero_identity(const DecompositionRun& run);
RhoZeroIdentity rho_zero_identity(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg);

/// CSV with header `method,label,estimate,std_error`, 17 significant digits.
void write_report_csv(std::ostream& out, std::span<const DecompositionReport> reports,
                      bool header = true);

}  // namespace svdecomp
