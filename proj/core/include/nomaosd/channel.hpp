#pragma once

#include <vector>

#include "nomaosd/gf2.hpp"
#include "nomaosd/grid_density.hpp"
#include "nomaosd/rng.hpp"

namespace nomaosd {

struct UserChannel {
    std::vector<double> h;  // per-user gains, all > 0
    double sigma2 = 1.0;    // noise power

    std::size_t n_users() const { return h.size(); }
    double snr_linear() const;
    double snr_db() const;
    void validate() const;

    // gains fixed, sigma2 chosen so that sum(h^2)/sigma2 hits the target SNR
    static UserChannel from_snr_db(std::vector<double> gains, double snr_db);
};

struct ReceivedBlock {
    std::vector<double> r;                     // superposed channel observations
    std::vector<BitVec> tx_codewords;          // per user, code order (metadata)
    std::vector<Permutation> interleavers;     // channel pos i carries code pos pi[i]
};

// x_i = 1 - 2 c_i
std::vector<double> bpsk(const BitVec& bits);

// r_i = sum_u h_u * x_i(u) + w_i with fresh uniform per-user interleavers
ReceivedBlock transmit(const std::vector<BitVec>& codewords, const UserChannel& ch, Rng& rng);

// single-side channel LLR density N(2/sigma2, 4/sigma2)
GridDensity awgn_llr_density(double sigma2, GridSpec grid = GridSpec::llr_default());

}  // namespace nomaosd
