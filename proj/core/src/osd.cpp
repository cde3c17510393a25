#include "nomaosd/osd.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nomaosd {

std::uint64_t binomial(std::uint32_t n, std::uint32_t r) {
    if (r > n) return 0;
    r = std::min(r, n - r);
    std::uint64_t acc = 1;
    for (std::uint32_t i = 1; i <= r; ++i) {
        // n <= 64 keeps this exact in 64 bits
        acc = acc * (n - r + i) / i;
    }
    return acc;
}

std::uint64_t binomial_sum(std::uint32_t n, std::uint32_t max_r) {
    std::uint64_t s = 0;
    for (std::uint32_t j = 0; j <= std::min(max_r, n); ++j) s += binomial(n, j);
    return s;
}

TepEnumerator::TepEnumerator(std::uint32_t k, std::uint32_t max_weight)
    : k_(k), m_(std::min(max_weight, k)) {}

bool TepEnumerator::next(Tep& out) {
    if (w_ == 0) {
        if (start_weight_) {
            start_weight_ = false;
            out.flips.clear();
            ++emitted_;
            return true;
        }
        w_ = 1;
        start_weight_ = true;
    }
    while (w_ <= m_) {
        if (start_weight_) {
            q_.resize(w_);
            std::iota(q_.begin(), q_.end(), 0);
            start_weight_ = false;
        } else {
            // next lexicographic combination in complement space
            long i = static_cast<long>(w_) - 1;
            while (i >= 0 && q_[static_cast<std::size_t>(i)] ==
                                 k_ - w_ + static_cast<std::uint32_t>(i))
                --i;
            if (i < 0) {
                ++w_;
                start_weight_ = true;
                continue;
            }
            ++q_[static_cast<std::size_t>(i)];
            for (auto j = static_cast<std::size_t>(i) + 1; j < w_; ++j) q_[j] = q_[j - 1] + 1;
        }
        out.flips.resize(w_);
        for (std::size_t j = 0; j < w_; ++j) out.flips[j] = k_ - 1 - q_[j];
        ++emitted_;
        return true;
    }
    return false;
}

std::uint64_t TepEnumerator::total_count(std::uint32_t k, std::uint32_t max_weight) {
    return binomial_sum(k, std::min(max_weight, k));
}

std::uint64_t TepEnumerator::rank_of(std::span<const std::uint32_t> flips_desc, std::uint32_t k) {
    const auto w = static_cast<std::uint32_t>(flips_desc.size());
    std::uint64_t rank = 0;
    for (std::uint32_t j = 0; j < w; ++j) rank += binomial(k, j);
    // lexicographic rank of the complement-space combination
    std::uint32_t prev = 0;
    for (std::uint32_t i = 0; i < w; ++i) {
        const std::uint32_t qi = k - 1 - flips_desc[i];
        for (std::uint32_t v = prev; v < qi; ++v) rank += binomial(k - 1 - v, w - 1 - i);
        prev = qi + 1;
    }
    return rank;
}

Tep TepEnumerator::unrank(std::uint64_t rank, std::uint32_t k) {
    std::uint32_t w = 0;
    while (rank >= binomial(k, w)) {
        rank -= binomial(k, w);
        ++w;
        if (w > k) throw std::invalid_argument("unrank: rank beyond enumeration");
    }
    Tep tep;
    tep.flips.resize(w);
    std::uint32_t prev = 0;
    for (std::uint32_t i = 0; i < w; ++i) {
        for (std::uint32_t v = prev;; ++v) {
            const std::uint64_t cnt = binomial(k - 1 - v, w - 1 - i);
            if (rank < cnt) {
                tep.flips[i] = k - 1 - v;
                prev = v + 1;
                break;
            }
            rank -= cnt;
        }
    }
    return tep;
}

OrderedContext order_and_reduce(std::span<const double> llr, const LinearCode& code) {
    if (llr.size() != code.n) throw std::invalid_argument("order_and_reduce: llr length != n");
    for (double v : llr)
        if (!std::isfinite(v)) throw std::invalid_argument("order_and_reduce: non-finite llr");

    const std::size_t n = code.n, k = code.k;
    Permutation order = identity_perm(n);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return std::abs(llr[a]) > std::abs(llr[b]);
    });

    auto ge = gaussian_eliminate(code.generator, order);

    OrderedContext ctx;
    ctx.code = &code;
    ctx.perm = compose_perm(order, ge.pi2);
    ctx.gsys = std::move(ge.systematic);
    ctx.y.resize(n);
    ctx.alpha.resize(n);
    ctx.llr.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = llr[ctx.perm[i]];
        ctx.llr[i] = v;
        ctx.alpha[i] = std::abs(v);
        ctx.y[i] = v < 0 ? 1 : 0;
    }

    const std::size_t np = n - k;
    ctx.parity_words = (np + 63) / 64;
    ctx.parity_rows.assign(k * ctx.parity_words, 0);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < np; ++c)
            if (ctx.gsys.get(r, k + c))
                ctx.parity_rows[r * ctx.parity_words + (c >> 6)] |= 1ULL << (c & 63);
    ctx.y_parity.assign(ctx.parity_words, 0);
    for (std::size_t c = 0; c < np; ++c)
        if (ctx.y[k + c]) ctx.y_parity[c >> 6] |= 1ULL << (c & 63);
    return ctx;
}

namespace detail {

// parity words of (y_B ^ e) * P for the zero TEP; callers XOR rows per flip
inline std::vector<std::uint64_t> base_parity(const OrderedContext& ctx) {
    std::vector<std::uint64_t> base(ctx.parity_words, 0);
    const std::size_t k = ctx.code->k;
    for (std::size_t r = 0; r < k; ++r)
        if (ctx.y[r])
            for (std::size_t w = 0; w < ctx.parity_words; ++w)
                base[w] ^= ctx.parity_rows[r * ctx.parity_words + w];
    return base;
}

inline double parity_whd(const OrderedContext& ctx, const std::uint64_t* parity) {
    double acc = 0;
    const std::size_t k = ctx.code->k;
    for (std::size_t w = 0; w < ctx.parity_words; ++w) {
        std::uint64_t diff = parity[w] ^ ctx.y_parity[w];
        while (diff) {
            const int b = std::countr_zero(diff);
            acc += ctx.alpha[k + (w << 6) + static_cast<std::size_t>(b)];
            diff &= diff - 1;
        }
    }
    return acc;
}

}  // namespace detail

std::vector<std::uint64_t> reencode_base_parity(const OrderedContext& ctx) {
    return detail::base_parity(ctx);
}

double reencode_whd(const OrderedContext& ctx, std::span<const std::uint32_t> flips,
                    std::span<const std::uint64_t> base_parity) {
    thread_local std::vector<std::uint64_t> parity;
    parity.assign(base_parity.begin(), base_parity.end());
    double whd = 0;
    for (std::uint32_t f : flips) {
        whd += ctx.alpha[f];
        const std::uint64_t* row = ctx.parity_rows.data() + f * ctx.parity_words;
        for (std::size_t w = 0; w < ctx.parity_words; ++w) parity[w] ^= row[w];
    }
    return whd + detail::parity_whd(ctx, parity.data());
}

std::pair<BitVec, double> reencode(const OrderedContext& ctx, const Tep& tep) {
    const std::size_t k = ctx.code->k, n = ctx.code->n;
    auto parity = detail::base_parity(ctx);
    double whd = 0;
    for (std::uint32_t f : tep.flips) {
        if (f >= k) throw std::invalid_argument("reencode: flip outside MRB");
        whd += ctx.alpha[f];
        for (std::size_t w = 0; w < ctx.parity_words; ++w)
            parity[w] ^= ctx.parity_rows[f * ctx.parity_words + w];
    }
    whd += detail::parity_whd(ctx, parity.data());

    BitVec cw(n);
    for (std::size_t i = 0; i < k; ++i) cw[i] = ctx.y[i];
    for (std::uint32_t f : tep.flips) cw[f] ^= 1;
    for (std::size_t c = 0; c < n - k; ++c) cw[k + c] = (parity[c >> 6] >> (c & 63)) & 1ULL;
    return {std::move(cw), whd};
}

OsdResult osd_decode(std::span<const double> llr, const LinearCode& code, std::uint32_t order) {
    if (order > code.k) throw std::invalid_argument("osd_decode: order > k");
    OrderedContext ctx = order_and_reduce(llr, code);
    const std::size_t k = code.k, n = code.n;

    const auto base = detail::base_parity(ctx);
    std::vector<std::uint64_t> parity(ctx.parity_words);

    TepEnumerator en(static_cast<std::uint32_t>(k), order);
    Tep tep, best_tep;
    double best = std::numeric_limits<double>::infinity();
    std::uint64_t tried = 0;
    while (en.next(tep)) {
        ++tried;
        parity = base;
        double whd = 0;
        for (std::uint32_t f : tep.flips) {
            whd += ctx.alpha[f];
            for (std::size_t w = 0; w < ctx.parity_words; ++w)
                parity[w] ^= ctx.parity_rows[f * ctx.parity_words + w];
        }
        whd += detail::parity_whd(ctx, parity.data());
        if (whd < best) {
            best = whd;
            best_tep = tep;
        }
    }

    auto [cw_ordered, whd] = reencode(ctx, best_tep);
    OsdResult res;
    res.codeword.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.codeword[ctx.perm[i]] = cw_ordered[i];
    res.whd = whd;
    res.best_tep = std::move(best_tep);
    res.teps_tried = tried;
    return res;
}

}  // namespace nomaosd
