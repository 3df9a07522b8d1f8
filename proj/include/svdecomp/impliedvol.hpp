#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "svdecomp/decomposition.hpp"

namespace svdecomp {

/// Which leading volatility the F-terms are evaluated at.
enum class IvVariant {
    Projection,  ///< adapted projection v(u), Ito terms
    Malliavin,   ///< average future volatility sigma_bar(u), Malliavin terms
};

std::string to_string(IvVariant v);

/// Correction integrals at one spot level.
///   F2 = the rho-weighted vanna piece
///   F3 = the rho-independent pieces (drift_adjust, plus vomma for Projection)
///   F1 = F2 + F3, accumulated separately as the full integrand
struct FTerms {
    Estimate F1, F2, F3;
};

/// Spot whose forward equals the strike, K*exp(-r(T - t)). There d+ = -d-
/// and dBS/dS = (BS + S)/(2S).
double atm_forward_spot(const MarketSpec& market);

/// Throws ConfigError unless market.spot == atm_forward_spot(market), and
/// std::logic_error if F1 != F2 + F3 to 1e-12 relative on some path.
FTerms f_terms(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg, IvVariant variant);

struct IvSlopeReport {
    IvVariant variant = IvVariant::Projection;
    double s_star = 0.0;
    double bump = 0.0;
    double implied_vol = 0.0;  ///< I(S*) from the MC price at S*
    double vega = 0.0;         ///< dBS/dsigma at (S*, I(S*))
    Estimate price;            ///< MC price at S*
    Estimate F1, F2, F3;       ///< at S*
    Estimate dF2, dF3;         ///< CRN central differences in the spot
    /// (dF2 + dF3 - F1/(2S*)) / vega
    Estimate slope_formula;
    /// (dF2 - (F1 + dF3)/(2S*)) / vega, kept for comparison.
    Estimate slope_formula_as_printed;
    /// (I(S*+h) - I(S*-h)) / (2h), SE by the delta method.
    Estimate slope_fd;
    /// slope_formula - slope_fd with per-path combined SE.
    Estimate slope_gap;
};

struct IvSlopeOptions {
    double relative_bump = 1e-3;
    SabrMalliavinForm sabr_form = SabrMalliavinForm::ChainRule;
};

/// market.spot is ignored and replaced by S*.
IvSlopeReport iv_slope(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg,
                       IvVariant variant, const IvSlopeOptions& opts = {});

struct IvSlopePair {
    IvSlopeReport projection;
    IvSlopeReport malliavin;
    /// projection.slope_formula - malliavin.slope_formula on shared paths.
    Estimate formula_difference;
};

/// Both variants from one set of three runs (S*, S*+h, S*-h).
IvSlopePair iv_slope_both(const ModelSpec& model, const MarketSpec& market, const SimConfig& cfg,
                          const IvSlopeOptions& opts = {});

/// CSV with header `quantity,estimate,std_error`, 17 significant digits.
/// Quantities are prefixed with the variant name.
void write_iv_slope_csv(std::ostream& out, std::span<const IvSlopeReport> reports, bool header = true);

}  // namespace svdecomp
