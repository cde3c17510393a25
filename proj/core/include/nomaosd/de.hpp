#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "nomaosd/channel.hpp"
#include "nomaosd/gf2.hpp"
#include "nomaosd/grid_density.hpp"

namespace nomaosd {

// Soft-symbol density pair conditioned on the transmitted symbol.
struct JPair {
    GridDensity plus;   // mu density given x = +1
    GridDensity minus;  // mu density given x = -1
};

// Density transform of the soft-output decoder: priori LLR density in,
// extrinsic LLR density out (single side, all-zero convention).
class DeltaBackend {
  public:
    virtual ~DeltaBackend() = default;
    virtual GridDensity transform(const GridDensity& priori_single, const LinearCode& code,
                                  std::uint32_t order, std::uint64_t seed) const = 0;
    virtual std::string_view name() const = 0;
};

// Monte Carlo through the actual decoder: sample LLR vectors, decode,
// histogram the extrinsic outputs. Deterministic given the seed.
class EmpiricalDelta final : public DeltaBackend {
  public:
    explicit EmpiricalDelta(std::size_t samples = 10000,
                            GridSpec out_grid = GridSpec::llr_default())
        : samples_(samples), out_grid_(out_grid) {}
    GridDensity transform(const GridDensity& priori_single, const LinearCode& code,
                          std::uint32_t order, std::uint64_t seed) const override;
    std::string_view name() const override { return "empirical"; }

  private:
    std::size_t samples_;
    GridSpec out_grid_;
};

// Order-statistics model of the two reprocessing phases: the minimum WHD of
// the correct-side phase is a competition between the transmitted codeword's
// WHD and the minimum of the wrong-candidate pool; the opposite phase is a
// pure pool minimum. Pool moments and the pairwise WHD correlation are
// calibrated by Monte Carlo from the priori density; the extrinsic density is
// the convolution of the phase-1 minimum with the negated phase-0 minimum.
class SemianalyticDelta final : public DeltaBackend {
  public:
    explicit SemianalyticDelta(std::size_t samples = 4000,
                               GridSpec out_grid = GridSpec::llr_default())
        : samples_(samples), out_grid_(out_grid) {}

    // override the phase candidate counts (defaults: full order-m shells on
    // the k-1 punctured basis for both phases)
    void set_phase_sizes(std::uint64_t n0, std::uint64_t n1) { n0_ = n0; n1_ = n1; }

    struct Calibration {
        std::vector<double> p_err_count;  // P(#basis errors = j), j = 0..order
        double pe_prefix = 0;             // P(error pattern within the first n0 TEPs)
        double mu1 = 0, var1 = 0;         // WHD of the transmitted word to ybar
        double mu2 = 0, var2 = 0;         // wrong-candidate WHD pool moments
        double rho = 0;                   // pairwise pool correlation
        std::uint64_t n0 = 0, n1 = 0;
    };
    Calibration calibrate(const GridDensity& priori_single, const LinearCode& code,
                          std::uint32_t order, std::uint64_t seed) const;

    GridDensity transform(const GridDensity& priori_single, const LinearCode& code,
                          std::uint32_t order, std::uint64_t seed) const override;
    std::string_view name() const override { return "semianalytic"; }

  private:
    std::size_t samples_;
    GridSpec out_grid_;
    std::uint64_t n0_ = 0, n1_ = 0;  // 0 = derive from order
};

// No decoding: extrinsic density equals the priori density (uncoded reference).
class IdentityDelta final : public DeltaBackend {
  public:
    GridDensity transform(const GridDensity& priori_single, const LinearCode&, std::uint32_t,
                          std::uint64_t) const override {
        return priori_single;
    }
    std::string_view name() const override { return "identity"; }
};

std::unique_ptr<DeltaBackend> make_delta_backend(std::string_view name, std::size_t samples,
                                                 GridSpec out_grid = GridSpec::llr_default());

struct DeState {
    int t = 0;
    std::vector<GridDensity> priori;     // per user, single side
    std::vector<GridDensity> extrinsic;  // per user; filled for decoding iterations
    std::vector<JPair> symbol;           // mu densities consumed by this iteration's PIC
    bool decoding = false;
};

// LLR densities of the PIC-only phase: the per-symbol recursion is a
// deterministic function of the noise for fixed symbols, so the density is
// the noise measure pushed through the iterated map, averaged over
// interferer symbol combinations.
std::vector<GridDensity> ds_off_density(const UserChannel& ch, int t,
                                        GridSpec grid = GridSpec::llr_default(),
                                        std::uint32_t w_cells = 4096,
                                        double clip_abort = 1e-3);

// Cancellation-node transform: integrate the symbol-parameterized Gaussian
// PIC output against the interferers' mu densities, averaged over their
// symbol signs. Tensor-grid quadrature up to two interferers, Monte Carlo
// beyond.
GridDensity cn_transform(const std::vector<JPair>& symbol, const UserChannel& ch,
                         std::size_t user, GridSpec grid = GridSpec::llr_default(),
                         std::uint64_t mc_seed = 1);

GridDensity dn_transform(const GridDensity& priori_single, const LinearCode& code,
                         std::uint32_t order, const DeltaBackend& backend, std::uint64_t seed);

// single-side posterior: priori and extrinsic are independent, so convolve
GridDensity posterior_density(const GridDensity& priori_single, const GridDensity& extrinsic_single);

// estimation-node transform per conditioning side
JPair en_transform(const GridDensity& extrinsic_plus, const GridDensity& extrinsic_minus,
                   GridSpec mu_spec = GridSpec::mu_default());

struct DeOptions {
    GridSpec llr_grid = GridSpec::llr_default();
    GridSpec mu_grid = GridSpec::mu_default();
    std::uint64_t seed = 1;
    std::uint32_t w_cells = 4096;
    double clip_abort = 1e-3;
};

// Full recursion: PIC-only densities for t <= t_off+1, then
// decoder/estimation/cancellation transforms per iteration.
std::vector<DeState> de_run(const UserChannel& ch, const LinearCode& code, std::uint32_t order,
                            int t_off, int t_max, const DeltaBackend& backend,
                            const DeOptions& opt = {});

}  // namespace nomaosd
