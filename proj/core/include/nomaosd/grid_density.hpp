#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "nomaosd/rng.hpp"

namespace nomaosd {

struct GridSpec {
    double lo = -256.0;
    double hi = 256.0;
    std::uint32_t n_bins = 16384;

    double width() const { return (hi - lo) / n_bins; }
    double center(std::uint32_t i) const { return lo + (i + 0.5) * width(); }
    double edge(std::uint32_t i) const { return lo + i * width(); }
    // bin index, or -1 when x is outside [lo, hi]; x == hi maps to the last bin
    long bin_of(double x) const;
    bool operator==(const GridSpec&) const = default;

    static GridSpec llr_default() { return {-256.0, 256.0, 16384}; }
    static GridSpec mu_default() { return {-1.0, 1.0, 8192}; }
};

// Probability mass on a uniform grid (mass per bin, not density values).
// Mass falling outside the support is accounted in clipped_mass, never
// silently renormalized.
class GridDensity {
  public:
    GridDensity() = default;
    explicit GridDensity(GridSpec spec) : spec_(spec), mass_(spec.n_bins, 0.0) {}

    static GridDensity from_samples(std::span<const double> samples, GridSpec spec);
    static GridDensity gaussian(double mu, double var, GridSpec spec);
    static GridDensity point_mass(double x, GridSpec spec);

    const GridSpec& spec() const { return spec_; }
    const std::vector<double>& mass() const { return mass_; }
    std::vector<double>& mutable_mass() { return mass_; }
    double clipped_mass() const { return clipped_; }
    double total_mass() const;

    double mean() const;
    double variance() const;

    void deposit(double x, double w);
    // spread w uniformly over the value interval [a, b]
    void deposit_interval(double a, double b, double w);
    // add weight * N(mu, sd^2) discretized by bin-edge CDF differences
    void add_gaussian(double mu, double sd, double weight);
    void add_clipped(double w) { clipped_ += w; }
    void scale(double s);
    void normalize();  // rescale in-grid mass to 1, zeroing clipped

    void write_csv(std::ostream& os) const;
    static GridDensity read_csv(std::istream& is);

  private:
    GridSpec spec_;
    std::vector<double> mass_;
    double clipped_ = 0.0;
};

// density of the sum of independent variables; bin widths must match
GridDensity convolve(const GridDensity& a, const GridDensity& b);
GridDensity mirror(const GridDensity& d);   // X -> -X
GridDensity halfmix(const GridDensity& d);  // (d + mirror(d)) / 2
GridDensity regrid(const GridDensity& d, GridSpec spec);

// density of mu = tanh(x/2); mass preserving interval transport
GridDensity tanh_pushforward(const GridDensity& d, GridSpec mu_spec);
// inverse map x = 2 atanh(mu); values beyond the target grid are clamped to
// its edge bins
GridDensity tanh_pullback(const GridDensity& j, GridSpec llr_spec);

double ber_of(const GridDensity& single_side);         // mass below zero
double residual_variance(const GridDensity& d);        // E[1 - tanh^2(x/2)]
double tv_distance(const GridDensity& a, const GridDensity& b);

// inverse-CDF sampling with uniform in-bin jitter
class GridSampler {
  public:
    explicit GridSampler(const GridDensity& d);
    double draw(Rng& rng) const;

  private:
    GridSpec spec_;
    std::vector<double> cdf_;
};

}  // namespace nomaosd
