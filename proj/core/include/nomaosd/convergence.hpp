#pragma once

#include <cstdint>
#include <vector>

#include "nomaosd/channel.hpp"
#include "nomaosd/de.hpp"

namespace nomaosd {

// Residual symbol variance after decoding with Gaussian priori N(2/xi, 4/xi).
double g_d(double xi, const LinearCode& code, std::uint32_t order, const DeltaBackend& backend,
           std::uint64_t seed, GridSpec grid = GridSpec::llr_default());

// Monotone tabulation of g_d on log-spaced knots with per-knot fixed seeds,
// interpolated shape-preservingly; the inverse is a bisection on the
// interpolant.
struct GdTableOptions {
    double xi_lo = 0.01;
    double xi_hi = 16.0;
    std::size_t knots = 64;
    int threads = 1;
};

class GdTable {
  public:
    using Options = GdTableOptions;

    GdTable(const LinearCode& code, std::uint32_t order, const DeltaBackend& backend,
            std::uint64_t seed, Options opt = {}, GridSpec grid = GridSpec::llr_default());

    double eval(double xi) const;
    double inverse(double g) const;  // clamped to the tabulated range
    double xi_lo() const { return xi_[0]; }
    double xi_hi() const { return xi_.back(); }
    bool repaired() const { return repaired_; }  // monotonicity fixes applied

    const std::vector<double>& knots_xi() const { return xi_; }
    const std::vector<double>& knots_g() const { return g_; }

  private:
    std::vector<double> xi_, g_;     // knots (xi ascending, g nondecreasing)
    std::vector<double> lx_, slope_; // log-xi abscissae and PCHIP slopes
    bool repaired_ = false;
    void build_slopes();
};

struct ConvergencePoint {
    std::vector<double> xi_star;                 // converged interference-noise power per user
    std::vector<GridDensity> converged_density;  // N(2/xi*, 4/xi*)
    int multiplicity = 1;                        // intersections found (largest selected)
    std::vector<double> intersections;           // equal-power: every root found
};

// Intersection of the two per-user fixed-point curves of a two-user system.
ConvergencePoint two_user_fixed_point(const UserChannel& ch, const GdTable& table,
                                      double tol = 1e-3,
                                      GridSpec grid = GridSpec::llr_default());

// Equal-power system: intersections of g_d with the power-balance line
// g_e(xi) = (xi - n_u/snr) / (n_u - 1); the largest root is the operating point.
ConvergencePoint equal_power_fixed_point(std::size_t n_users, double snr_db,
                                         const GdTable& table, double tol = 1e-3,
                                         GridSpec grid = GridSpec::llr_default());

// Damped direct iteration of the same balance equation (solver cross-check).
double equal_power_damped_iteration(std::size_t n_users, double snr_db, const GdTable& table,
                                    double damping = 0.5, int iters = 400);

// General fixed-point residual xi_u - (sum_{j!=u} h_j^2 g_d(xi_j) + sigma^2)/h_u^2.
std::vector<double> fixed_point_residual(const std::vector<double>& xi, const UserChannel& ch,
                                         const GdTable& table);

}  // namespace nomaosd
