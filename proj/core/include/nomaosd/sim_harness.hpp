#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nomaosd/de.hpp"
#include "nomaosd/joint_decoder.hpp"

namespace nomaosd {

struct CollectFlags {
    bool ber = true;
    bool bler = true;
    bool densities = false;
    bool nc_stats = false;
};

struct ExperimentSpec {
    JdConfig cfg;                    // gains/decoder parameters; sigma2 set per SNR point
    std::vector<double> snr_points;  // dB
    std::size_t n_blocks = 1000;
    std::uint64_t seed = 1;
    CollectFlags collect;
    bool all_zero = false;  // all-zero transmission instead of random payloads
    int threads = 1;
    GridSpec density_grid{-64.0, 64.0, 512};

    void validate() const;
};

// Integer-count histogram: merging is order-independent, so threaded runs
// reproduce the serial result exactly.
struct CountHist {
    GridSpec grid;
    std::vector<std::uint64_t> counts;
    std::uint64_t clipped = 0;

    explicit CountHist(GridSpec g = {}) : grid(g), counts(g.n_bins, 0) {}
    void add(double x);
    void merge(const CountHist& o);
    std::uint64_t total() const;
    GridDensity to_density() const;
};

struct IterUserStats {
    std::uint64_t bit_errors = 0;
    std::uint64_t bits = 0;
    std::uint64_t block_errors = 0;
    std::uint64_t blocks = 0;
    CountHist priori, extrinsic, posterior;  // single side (folded by the sent symbol)

    double ber() const { return bits ? static_cast<double>(bit_errors) / bits : 0.0; }
    double bler() const { return blocks ? static_cast<double>(block_errors) / blocks : 0.0; }
    double ber_ci95() const;  // normal-approximation half width
    void merge(const IterUserStats& o);
};

struct ExperimentResult {
    std::vector<double> snr_points;
    std::size_t n_users = 0;
    int t_max = 0;
    // stats[snr][user][t-1]
    std::vector<std::vector<std::vector<IterUserStats>>> stats;
    std::uint64_t converged_blocks = 0;
    double mean_converged_at = 0;
    double wall_seconds = 0;
    std::size_t completed_blocks = 0;

    const IterUserStats& at(std::size_t snr_idx, std::size_t user, int t) const {
        return stats[snr_idx][user][static_cast<std::size_t>(t - 1)];
    }
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

struct NcStat {
    double snr_db = 0;
    double mean_nc = 0;
    std::size_t samples = 0;
};

// Dual-decoder common-error statistic over a single-user AWGN ensemble.
std::vector<NcStat> run_nc_experiment(const LinearCode& code, std::uint32_t m0, std::uint32_t m1,
                                      const std::vector<double>& snr_points_db,
                                      std::size_t samples, std::uint64_t seed, int threads = 1);

struct TvRow {
    std::size_t user = 0;
    int t = 0;
    std::string kind;  // priori | extrinsic | posterior
    double tv = 0;
};

// Total-variation distances between simulated single-side histograms and the
// predicted densities, on the histogram grid.
std::vector<TvRow> compare_de(const ExperimentResult& sim, std::size_t snr_idx,
                              const std::vector<DeState>& de_states);

}  // namespace nomaosd
