#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nomaosd/gf2.hpp"

namespace nomaosd {

// Reliability-ordered decoding context: G reduced to [I_k | P] under the
// composed permutation, with packed parity rows cached for re-encoding.
struct OrderedContext {
    const LinearCode* code = nullptr;
    Permutation perm;             // ordered position i <- original position perm[i]
    BinaryMatrix gsys;            // [I_k | P]
    BitVec y;                     // hard decisions, ordered domain
    std::vector<double> alpha;    // reliabilities, ordered (nonincreasing up to pi2 swaps)
    std::vector<double> llr;      // permuted input LLRs

    std::size_t parity_words = 0;
    std::vector<std::uint64_t> parity_rows;  // k x parity_words, packed P rows
    std::vector<std::uint64_t> y_parity;     // parity part of y, packed
};

struct Tep {
    std::vector<std::uint32_t> flips;  // MRB positions to flip, descending index
    std::size_t weight() const { return flips.size(); }
};

struct OsdResult {
    BitVec codeword;   // original position order
    double whd = 0.0;
    Tep best_tep;
    std::uint64_t teps_tried = 0;
};

// Test error patterns of weight 0..max_weight in the reprocessing order:
// weight ascending; within a weight, patterns flipping the least reliable
// (highest-index) MRB positions come first.
class TepEnumerator {
  public:
    TepEnumerator(std::uint32_t k, std::uint32_t max_weight);
    bool next(Tep& out);
    std::uint64_t emitted() const { return emitted_; }

    static std::uint64_t total_count(std::uint32_t k, std::uint32_t max_weight);
    // 0-based position of a pattern in the enumeration order
    static std::uint64_t rank_of(std::span<const std::uint32_t> flips_desc, std::uint32_t k);
    // inverse of rank_of
    static Tep unrank(std::uint64_t rank, std::uint32_t k);

  private:
    std::uint32_t k_, m_, w_ = 0;
    bool start_weight_ = true;
    std::vector<std::uint32_t> q_;  // combo in complement space, ascending
    std::uint64_t emitted_ = 0;
};

std::uint64_t binomial(std::uint32_t n, std::uint32_t r);
std::uint64_t binomial_sum(std::uint32_t n, std::uint32_t max_r);  // sum_{j<=max_r} C(n,j)

// Sort by descending |llr| (ties: lower original index first) and reduce.
// Throws on non-finite LLRs and propagates rank failures.
OrderedContext order_and_reduce(std::span<const double> llr, const LinearCode& code);

// Codeword estimate (ordered domain) for one TEP and its weighted Hamming
// distance to y.
std::pair<BitVec, double> reencode(const OrderedContext& ctx, const Tep& tep);

// parity words of the zero-TEP re-encoding; amortizes the base XOR across TEPs
std::vector<std::uint64_t> reencode_base_parity(const OrderedContext& ctx);
// WHD of the candidate for `flips` without materializing the codeword
double reencode_whd(const OrderedContext& ctx, std::span<const std::uint32_t> flips,
                    std::span<const std::uint64_t> base_parity);

// Order-m reprocessing: minimum-WHD estimate mapped back to original order.
OsdResult osd_decode(std::span<const double> llr, const LinearCode& code, std::uint32_t order);

}  // namespace nomaosd
