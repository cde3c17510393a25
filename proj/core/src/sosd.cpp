#include "nomaosd/sosd.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nomaosd {

namespace {

struct PackedCandidates {
    std::size_t words = 0;  // per candidate: mrb words + parity words
    std::size_t mrb_words = 0;
    std::vector<std::uint64_t> bits;
    std::vector<double> whd;
};

// enumerate order-m candidates over ctx, keeping packed codeword bits
PackedCandidates enumerate_candidates(const OrderedContext& ctx, std::uint32_t order) {
    const std::size_t k = ctx.code->k;
    const std::size_t mrb_words = (k + 63) / 64;
    const std::size_t words = mrb_words + ctx.parity_words;
    const std::uint64_t count = TepEnumerator::total_count(static_cast<std::uint32_t>(k), order);

    PackedCandidates out;
    out.words = words;
    out.mrb_words = mrb_words;
    out.bits.assign(count * words, 0);
    out.whd.resize(count);

    std::vector<std::uint64_t> ybw(mrb_words, 0);
    for (std::size_t i = 0; i < k; ++i)
        if (ctx.y[i]) ybw[i >> 6] |= 1ULL << (i & 63);
    std::vector<std::uint64_t> base(ctx.parity_words, 0);
    for (std::size_t r = 0; r < k; ++r)
        if (ctx.y[r])
            for (std::size_t w = 0; w < ctx.parity_words; ++w)
                base[w] ^= ctx.parity_rows[r * ctx.parity_words + w];

    TepEnumerator en(static_cast<std::uint32_t>(k), order);
    Tep tep;
    std::size_t idx = 0;
    while (en.next(tep)) {
        std::uint64_t* cand = out.bits.data() + idx * words;
        std::copy(ybw.begin(), ybw.end(), cand);
        std::copy(base.begin(), base.end(), cand + mrb_words);
        double whd = 0;
        for (std::uint32_t f : tep.flips) {
            whd += ctx.alpha[f];
            cand[f >> 6] ^= 1ULL << (f & 63);
            const std::uint64_t* row = ctx.parity_rows.data() + f * ctx.parity_words;
            for (std::size_t w = 0; w < ctx.parity_words; ++w) cand[mrb_words + w] ^= row[w];
        }
        for (std::size_t w = 0; w < ctx.parity_words; ++w) {
            std::uint64_t diff = cand[mrb_words + w] ^ ctx.y_parity[w];
            while (diff) {
                const int b = std::countr_zero(diff);
                whd += ctx.alpha[k + (w << 6) + static_cast<std::size_t>(b)];
                diff &= diff - 1;
            }
        }
        out.whd[idx] = whd;
        ++idx;
    }
    return out;
}

}  // namespace

SosdResult sosd_extrinsic(std::span<const double> llr, const LinearCode& code,
                          std::uint32_t order) {
    if (order > code.k) throw std::invalid_argument("sosd_extrinsic: order > k");
    OrderedContext ctx = order_and_reduce(llr, code);
    const std::size_t n = code.n, k = code.k;

    PackedCandidates cands = enumerate_candidates(ctx, order);
    const std::size_t count = cands.whd.size();

    std::vector<std::uint32_t> by_whd(count);
    std::iota(by_whd.begin(), by_whd.end(), 0);
    std::stable_sort(by_whd.begin(), by_whd.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return cands.whd[a] < cands.whd[b]; });

    // walk candidates in ascending WHD; first value seen per (position, bit)
    // is that side's minimum
    const std::size_t n_words = (n + 63) / 64;
    std::vector<std::uint64_t> done0(n_words, 0), done1(n_words, 0);
    std::vector<std::uint64_t> full(n_words, 0);
    for (std::size_t i = 0; i < n; ++i) full[i >> 6] |= 1ULL << (i & 63);
    std::vector<double> best0(n, 0), best1(n, 0);

    auto expand = [&](const std::uint64_t* cand, std::size_t w) -> std::uint64_t {
        // candidate codeword bits for word w of the n-bit layout (mrb then parity)
        const std::size_t lo = w << 6;
        std::uint64_t bits = 0;
        for (std::size_t b = 0; b < 64 && lo + b < n; ++b) {
            const std::size_t pos = lo + b;
            const bool v = pos < k
                               ? (cand[pos >> 6] >> (pos & 63)) & 1ULL
                               : (cand[cands.mrb_words + ((pos - k) >> 6)] >> ((pos - k) & 63)) & 1ULL;
            bits |= static_cast<std::uint64_t>(v) << b;
        }
        return bits;
    };

    std::size_t settled = 0;
    for (std::uint32_t ci : by_whd) {
        const std::uint64_t* cand = cands.bits.data() + static_cast<std::size_t>(ci) * cands.words;
        const double whd = cands.whd[ci];
        for (std::size_t w = 0; w < n_words; ++w) {
            const std::uint64_t bits = expand(cand, w);
            std::uint64_t upd0 = ~done0[w] & ~bits & full[w];
            std::uint64_t upd1 = ~done1[w] & bits;
            done0[w] |= upd0;
            done1[w] |= upd1;
            while (upd0) {
                const int b = std::countr_zero(upd0);
                best0[(w << 6) + static_cast<std::size_t>(b)] = whd;
                upd0 &= upd0 - 1;
                ++settled;
            }
            while (upd1) {
                const int b = std::countr_zero(upd1);
                best1[(w << 6) + static_cast<std::size_t>(b)] = whd;
                upd1 &= upd1 - 1;
                ++settled;
            }
        }
        if (settled == 2 * n) break;
    }

    double sat = 0;
    for (std::size_t i = 0; i < n; ++i) sat += ctx.alpha[i];

    SosdResult res;
    res.extrinsic.resize(n);
    res.posterior.resize(n);
    res.hard.resize(n);
    res.found_pair.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool has0 = (done0[i >> 6] >> (i & 63)) & 1ULL;
        const bool has1 = (done1[i >> 6] >> (i & 63)) & 1ULL;
        double delta;
        if (has0 && has1)
            delta = best1[i] - best0[i] - ctx.llr[i];
        else
            delta = has0 ? sat : -sat;
        const std::size_t orig = ctx.perm[i];
        res.extrinsic[orig] = delta;
        res.found_pair[orig] = has0 && has1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        res.posterior[i] = res.extrinsic[i] + llr[i];
        res.hard[i] = res.posterior[i] < 0 ? 1 : 0;
    }

    // minimum-WHD candidate doubles as the hard decode output
    const std::uint32_t bi = by_whd.front();
    const std::uint64_t* cand = cands.bits.data() + static_cast<std::size_t>(bi) * cands.words;
    res.decode.codeword.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool v = i < k ? (cand[i >> 6] >> (i & 63)) & 1ULL
                             : (cand[cands.mrb_words + ((i - k) >> 6)] >> ((i - k) & 63)) & 1ULL;
        res.decode.codeword[ctx.perm[i]] = v;
    }
    res.decode.whd = cands.whd[bi];
    res.decode.teps_tried = count;
    return res;
}

DualOsdContext build_dual_context(std::span<const double> llr, const LinearCode& code,
                                  std::uint32_t target) {
    if (llr.size() != code.n) throw std::invalid_argument("build_dual_context: llr length != n");
    if (target >= code.n) throw std::invalid_argument("build_dual_context: target out of range");
    if (code.k < 2) throw std::invalid_argument("build_dual_context: k must be >= 2");
    for (double v : llr)
        if (!std::isfinite(v)) throw std::invalid_argument("build_dual_context: non-finite llr");

    const std::size_t n = code.n, k = code.k;
    Permutation order(n);
    order[0] = target;
    std::size_t pos = 1;
    Permutation rest = identity_perm(n);
    std::stable_sort(rest.begin(), rest.end(), [&](std::uint32_t a, std::uint32_t b) {
        return std::abs(llr[a]) > std::abs(llr[b]);
    });
    for (std::uint32_t idx : rest)
        if (idx != target) order[pos++] = idx;

    auto ge = gaussian_eliminate(code.generator, order);
    if (ge.pi2[0] != 0)
        throw std::runtime_error("build_dual_context: target column is not in the code support");

    DualOsdContext ctx;
    ctx.target = target;
    ctx.code = &code;
    ctx.perm = compose_perm(order, ge.pi2);
    ctx.z.resize(n - 1);
    for (std::size_t c = 1; c < n; ++c) ctx.z[c - 1] = ge.systematic.get(0, c);
    ctx.gbar = ge.systematic.submatrix(1, k, 1, n);

    ctx.ybar.resize(n - 1);
    ctx.alphabar.resize(n - 1);
    for (std::size_t c = 1; c < n; ++c) {
        const double v = llr[ctx.perm[c]];
        ctx.ybar[c - 1] = v < 0 ? 1 : 0;
        ctx.alphabar[c - 1] = std::abs(v);
    }

    const std::size_t kd = k - 1, nd = n - 1, np = nd - kd;
    ctx.parity_words = (np + 63) / 64;
    ctx.parity_rows.assign(kd * ctx.parity_words, 0);
    for (std::size_t r = 0; r < kd; ++r)
        for (std::size_t c = 0; c < np; ++c)
            if (ctx.gbar.get(r, kd + c))
                ctx.parity_rows[r * ctx.parity_words + (c >> 6)] |= 1ULL << (c & 63);
    ctx.y_parity.assign(ctx.parity_words, 0);
    ctx.z_parity.assign(ctx.parity_words, 0);
    for (std::size_t c = 0; c < np; ++c) {
        if (ctx.ybar[kd + c]) ctx.y_parity[c >> 6] |= 1ULL << (c & 63);
        if (ctx.z[kd + c]) ctx.z_parity[c >> 6] |= 1ULL << (c & 63);
    }
    return ctx;
}

DualSample dual_osd_sample(const DualOsdContext& ctx, std::uint64_t n0, std::uint64_t n1) {
    const std::size_t kd = ctx.code->k - 1;
    const std::uint64_t pool = kd >= 63 ? std::numeric_limits<std::uint64_t>::max()
                                        : (1ULL << kd);
    if (n0 == 0 || n1 == 0) throw std::invalid_argument("dual_osd_sample: empty phase");
    if (n0 > pool || n1 > pool)
        throw std::invalid_argument("dual_osd_sample: phase size exceeds 2^(k-1)");

    // base quantities for the two references
    double base_z_mrb = 0;  // WHD contribution of the z pattern over the MRB
    for (std::size_t i = 0; i < kd; ++i)
        if (ctx.z[i]) base_z_mrb += ctx.alphabar[i];

    std::vector<std::uint64_t> base(ctx.parity_words, 0);
    for (std::size_t r = 0; r < kd; ++r)
        if (ctx.ybar[r])
            for (std::size_t w = 0; w < ctx.parity_words; ++w)
                base[w] ^= ctx.parity_rows[r * ctx.parity_words + w];

    const std::size_t np = (ctx.code->n - 1) - kd;
    std::vector<std::uint64_t> parity(ctx.parity_words);

    double v0 = std::numeric_limits<double>::infinity();
    double v1 = std::numeric_limits<double>::infinity();
    Tep best0, best1;
    std::vector<std::uint64_t> par0(ctx.parity_words, 0), par1(ctx.parity_words, 0);

    TepEnumerator en(static_cast<std::uint32_t>(kd), static_cast<std::uint32_t>(kd));
    Tep tep;
    const std::uint64_t limit = std::max(n0, n1);
    while (en.emitted() < limit && en.next(tep)) {
        parity = base;
        double mrb0 = 0;    // MRB disagreement with ybar: just the flips
        double adj_z = 0;   // signed adjustment of the z-side MRB disagreement
        for (std::uint32_t f : tep.flips) {
            mrb0 += ctx.alphabar[f];
            adj_z += ctx.z[f] ? -ctx.alphabar[f] : ctx.alphabar[f];
            const std::uint64_t* row = ctx.parity_rows.data() + f * ctx.parity_words;
            for (std::size_t w = 0; w < ctx.parity_words; ++w) parity[w] ^= row[w];
        }
        double p0 = 0, p1 = 0;
        for (std::size_t w = 0; w < ctx.parity_words; ++w) {
            std::uint64_t d0 = parity[w] ^ ctx.y_parity[w];
            while (d0) {
                const int b = std::countr_zero(d0);
                p0 += ctx.alphabar[kd + (w << 6) + static_cast<std::size_t>(b)];
                d0 &= d0 - 1;
            }
            std::uint64_t d1 = parity[w] ^ ctx.y_parity[w] ^ ctx.z_parity[w];
            while (d1) {
                const int b = std::countr_zero(d1);
                p1 += ctx.alphabar[kd + (w << 6) + static_cast<std::size_t>(b)];
                d1 &= d1 - 1;
            }
        }
        const std::uint64_t idx = en.emitted() - 1;
        if (idx < n0) {
            const double w0 = mrb0 + p0;
            if (w0 < v0) {
                v0 = w0;
                best0 = tep;
                par0 = parity;
            }
        }
        if (idx < n1) {
            const double w1 = base_z_mrb + adj_z + p1;
            if (w1 < v1) {
                v1 = w1;
                best1 = tep;
                par1 = parity;
            }
        }
    }

    // n_c: common support of (c0 ^ ybar) and (c1 ^ ybar ^ z)
    std::uint32_t nc = 0;
    {
        BitVec e0(kd, 0), e1(kd, 0);
        for (std::uint32_t f : best0.flips) e0[f] ^= 1;
        for (std::uint32_t f : best1.flips) e1[f] ^= 1;
        for (std::size_t i = 0; i < kd; ++i)
            if (e0[i] && (e1[i] ^ ctx.z[i])) ++nc;
        for (std::size_t w = 0; w < ctx.parity_words; ++w) {
            const std::uint64_t d0 = par0[w] ^ ctx.y_parity[w];
            const std::uint64_t d1 = par1[w] ^ ctx.y_parity[w] ^ ctx.z_parity[w];
            std::uint64_t common = d0 & d1;
            if (const std::size_t rem = np - (w << 6); rem < 64)
                common &= (1ULL << rem) - 1;
            nc += static_cast<std::uint32_t>(std::popcount(common));
        }
    }

    DualSample s;
    s.v0 = v0;
    s.v1 = v1;
    s.delta = v1 - v0;
    s.n_c = nc;
    return s;
}

DualOrderParams dual_order_params(std::uint32_t k, std::uint32_t order, bool mrb_position) {
    if (order > k) throw std::invalid_argument("dual_order_params: order > k");
    DualOrderParams p;
    if (mrb_position) {
        p.n0 = binomial_sum(k - 1, order);
        p.n1 = order == 0 ? 0 : binomial_sum(k - 1, order - 1);
    } else {
        const std::uint64_t total = binomial_sum(k, order);
        p.n0 = p.n1 = (total + 1) / 2;
    }
    return p;
}

DualOrderParams dual_order_pair(std::uint32_t k, std::uint32_t m0, std::uint32_t m1) {
    return {binomial_sum(k - 1, m0), binomial_sum(k - 1, m1)};
}

}  // namespace nomaosd
