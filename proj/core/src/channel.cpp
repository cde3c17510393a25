#include "nomaosd/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nomaosd {

double UserChannel::snr_linear() const {
    double p = 0;
    for (double g : h) p += g * g;
    return p / sigma2;
}

double UserChannel::snr_db() const { return 10.0 * std::log10(snr_linear()); }

void UserChannel::validate() const {
    if (h.empty()) throw std::invalid_argument("UserChannel: no users");
    for (double g : h)
        if (!(g > 0)) throw std::invalid_argument("UserChannel: gains must be positive");
    if (!(sigma2 > 0)) throw std::invalid_argument("UserChannel: sigma2 must be positive");
}

UserChannel UserChannel::from_snr_db(std::vector<double> gains, double snr_db) {
    UserChannel ch;
    ch.h = std::move(gains);
    double p = 0;
    for (double g : ch.h) p += g * g;
    ch.sigma2 = p / std::pow(10.0, snr_db / 10.0);
    ch.validate();
    return ch;
}

std::vector<double> bpsk(const BitVec& bits) {
    std::vector<double> x(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] > 1) throw std::invalid_argument("bpsk: bits must be 0/1");
        x[i] = 1.0 - 2.0 * bits[i];
    }
    return x;
}

ReceivedBlock transmit(const std::vector<BitVec>& codewords, const UserChannel& ch, Rng& rng) {
    ch.validate();
    if (codewords.size() != ch.n_users())
        throw std::invalid_argument("transmit: codeword count != user count");
    const std::size_t n = codewords[0].size();
    for (const auto& c : codewords)
        if (c.size() != n) throw std::invalid_argument("transmit: codeword length mismatch");

    ReceivedBlock blk;
    blk.tx_codewords = codewords;
    blk.interleavers.reserve(ch.n_users());
    blk.r.assign(n, 0.0);

    for (std::size_t u = 0; u < ch.n_users(); ++u) {
        Permutation pi = identity_perm(n);
        std::shuffle(pi.begin(), pi.end(), rng);
        const auto x = bpsk(codewords[u]);
        for (std::size_t i = 0; i < n; ++i) blk.r[i] += ch.h[u] * x[pi[i]];
        blk.interleavers.push_back(std::move(pi));
    }
    std::normal_distribution<double> noise(0.0, std::sqrt(ch.sigma2));
    for (double& v : blk.r) v += noise(rng);
    return blk;
}

GridDensity awgn_llr_density(double sigma2, GridSpec grid) {
    if (!(sigma2 > 0)) throw std::invalid_argument("awgn_llr_density: sigma2 must be positive");
    return GridDensity::gaussian(2.0 / sigma2, 4.0 / sigma2, grid);
}

}  // namespace nomaosd
