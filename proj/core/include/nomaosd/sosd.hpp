#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nomaosd/gf2.hpp"
#include "nomaosd/osd.hpp"

namespace nomaosd {

struct SosdResult {
    std::vector<double> extrinsic;   // delta, original position order
    std::vector<double> posterior;   // delta + llr
    BitVec hard;                     // 1 iff posterior < 0
    std::vector<std::uint8_t> found_pair;  // both bit-0 and bit-1 candidates seen
    OsdResult decode;                // minimum-WHD candidate (osd output)
};

// Per-bit extrinsic LLRs from order-m reprocessing: for each position the
// lowest-WHD candidates with bit 0 and bit 1 are compared. A missing side
// saturates to +-sum|llr| with the sign of the present side.
SosdResult sosd_extrinsic(std::span<const double> llr, const LinearCode& code,
                          std::uint32_t order);

// One-position analysis decoder on the punctured code C(n-1, k-1): the target
// column is swapped to the front, the rest ordered by reliability, and the
// systematic reduction split into [1 z; 0 Gbar].
struct DualOsdContext {
    std::uint32_t target = 0;         // position i under analysis
    const LinearCode* code = nullptr;
    BinaryMatrix gbar;                // (k-1) x (n-1), systematic
    BitVec z;                         // n-1, parity row: [1 z] is a codeword under perm
    BitVec ybar;                      // hard decisions aligned to gbar columns
    std::vector<double> alphabar;     // reliabilities aligned to gbar columns
    Permutation perm;                 // length n, perm[0] == target

    std::size_t parity_words = 0;
    std::vector<std::uint64_t> parity_rows;
    std::vector<std::uint64_t> y_parity;
    std::vector<std::uint64_t> z_parity;
};

DualOsdContext build_dual_context(std::span<const double> llr, const LinearCode& code,
                                  std::uint32_t target);

struct DualSample {
    double v0 = 0;      // min WHD of the phase-0 estimates to ybar
    double v1 = 0;      // min WHD of the phase-1 estimates to ybar ^ z
    double delta = 0;   // extrinsic LLR of the target position: v1 - v0
    std::uint32_t n_c = 0;  // common error-support count of the two minimizers
};

// Phase-0 re-encodes the first n0 TEPs against ybar_B and measures to ybar;
// phase-1 re-encodes the first n1 TEPs and measures to ybar ^ z.
DualSample dual_osd_sample(const DualOsdContext& ctx, std::uint64_t n0, std::uint64_t n1);

// Candidate-count split of an order-m SOSD seen from one position: an MRB
// position keeps (sum_{j<=m} C(k-1,j), sum_{j<=m} C(k-1,j-1)); any other
// position splits the pool evenly.
struct DualOrderParams {
    std::uint64_t n0 = 0;
    std::uint64_t n1 = 0;
};
DualOrderParams dual_order_params(std::uint32_t k, std::uint32_t order, bool mrb_position);

// order-(m0,m1) phase sizes: full weight shells over the k-1 dual MRB
DualOrderParams dual_order_pair(std::uint32_t k, std::uint32_t m0, std::uint32_t m1);

}  // namespace nomaosd
