#pragma once

// Test-only exhaustive references, independent of the library decode paths:
// plain codebook enumeration and brute-force WHD scans.

#include <cmath>
#include <span>
#include <vector>

#include "nomaosd/gf2.hpp"
#include "nomaosd/rng.hpp"

namespace oracle {

using nomaosd::BitVec;
using nomaosd::LinearCode;

inline std::vector<BitVec> full_codebook(const LinearCode& code) {
    std::vector<BitVec> cb;
    cb.reserve(1ULL << code.k);
    for (std::uint64_t msg = 0; msg < (1ULL << code.k); ++msg) {
        BitVec b(code.k);
        for (std::size_t i = 0; i < code.k; ++i) b[i] = (msg >> i) & 1;
        cb.push_back(nomaosd::encode(b, code));
    }
    return cb;
}

inline double whd(const BitVec& cand, const BitVec& y, std::span<const double> alpha) {
    double acc = 0;
    for (std::size_t i = 0; i < cand.size(); ++i)
        if (cand[i] != y[i]) acc += alpha[i];
    return acc;
}

struct BruteForce {
    BitVec best_codeword;
    double best_whd = 0;
    std::vector<double> extrinsic;
};

// minimum-WHD codeword and per-bit extrinsic LLRs over the whole codebook
inline BruteForce exhaustive(std::span<const double> llr, const LinearCode& code,
                             const std::vector<BitVec>& codebook) {
    const std::size_t n = code.n;
    BitVec y(n);
    std::vector<double> alpha(n);
    double sat = 0;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = llr[i] < 0 ? 1 : 0;
        alpha[i] = std::abs(llr[i]);
        sat += alpha[i];
    }
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> best0(n, inf), best1(n, inf);
    BruteForce out;
    out.best_whd = inf;
    for (const auto& c : codebook) {
        const double w = whd(c, y, alpha);
        if (w < out.best_whd) {
            out.best_whd = w;
            out.best_codeword = c;
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto& slot = c[i] ? best1[i] : best0[i];
            slot = std::min(slot, w);
        }
    }
    out.extrinsic.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isinf(best1[i]))
            out.extrinsic[i] = sat;
        else if (std::isinf(best0[i]))
            out.extrinsic[i] = -sat;
        else
            out.extrinsic[i] = best1[i] - best0[i] - llr[i];
    }
    return out;
}

inline int min_distance(const std::vector<BitVec>& codebook) {
    int best = 1 << 30;
    for (const auto& c : codebook) {
        int w = 0;
        for (auto b : c) w += b;
        if (w > 0 && w < best) best = w;
    }
    return best;
}

// deterministic full-rank random code with no all-zero column
inline LinearCode random_code(std::size_t n, std::size_t k, std::uint64_t seed) {
    nomaosd::Rng rng(seed);
    std::uniform_int_distribution<int> bit(0, 1);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        nomaosd::BinaryMatrix g(k, n);
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t c = 0; c < n; ++c)
                if (bit(rng)) g.set(r, c, true);
        if (g.rank() != k) continue;
        bool zero_col = false;
        for (std::size_t c = 0; c < n && !zero_col; ++c) {
            bool any = false;
            for (std::size_t r = 0; r < k; ++r) any |= g.get(r, c);
            zero_col = !any;
        }
        if (zero_col) continue;
        LinearCode code;
        code.n = n;
        code.k = k;
        code.generator = std::move(g);
        return code;
    }
    throw std::runtime_error("random_code: generation failed");
}

}  // namespace oracle
