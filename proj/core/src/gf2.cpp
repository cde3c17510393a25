#include "nomaosd/gf2.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nomaosd {

Permutation identity_perm(std::size_t n) {
    Permutation p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::uint32_t>(i);
    return p;
}

Permutation invert_perm(const Permutation& p) {
    Permutation inv(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) inv[p[i]] = static_cast<std::uint32_t>(i);
    return inv;
}

Permutation compose_perm(const Permutation& inner, const Permutation& outer) {
    Permutation r(outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) r[i] = inner[outer[i]];
    return r;
}

BinaryMatrix::BinaryMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), words_((cols + 63) / 64), bits_(rows * words_, 0) {}

BinaryMatrix BinaryMatrix::from_rows(const std::vector<BitVec>& rows) {
    if (rows.empty()) throw std::invalid_argument("empty matrix");
    BinaryMatrix m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols_) throw std::invalid_argument("ragged rows");
        for (std::size_t c = 0; c < m.cols_; ++c)
            if (rows[r][c]) m.set(r, c, true);
    }
    return m;
}

void BinaryMatrix::xor_rows(std::size_t dst, std::size_t src) {
    std::uint64_t* d = bits_.data() + dst * words_;
    const std::uint64_t* s = bits_.data() + src * words_;
    for (std::size_t w = 0; w < words_; ++w) d[w] ^= s[w];
}

void BinaryMatrix::swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    std::uint64_t* pa = bits_.data() + a * words_;
    std::uint64_t* pb = bits_.data() + b * words_;
    for (std::size_t w = 0; w < words_; ++w) std::swap(pa[w], pb[w]);
}

void BinaryMatrix::swap_cols(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t r = 0; r < rows_; ++r) {
        const bool va = get(r, a), vb = get(r, b);
        set(r, a, vb);
        set(r, b, va);
    }
}

BitVec BinaryMatrix::row_bits(std::size_t r) const {
    BitVec v(cols_);
    for (std::size_t c = 0; c < cols_; ++c) v[c] = get(r, c);
    return v;
}

BinaryMatrix BinaryMatrix::columns(const Permutation& perm) const {
    BinaryMatrix m(rows_, perm.size());
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < perm.size(); ++c)
            if (get(r, perm[c])) m.set(r, c, true);
    return m;
}

BinaryMatrix BinaryMatrix::submatrix(std::size_t r0, std::size_t r1, std::size_t c0,
                                     std::size_t c1) const {
    BinaryMatrix m(r1 - r0, c1 - c0);
    for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c)
            if (get(r, c)) m.set(r - r0, c - c0, true);
    return m;
}

std::size_t BinaryMatrix::rank() const {
    BinaryMatrix m = *this;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols_ && rank < rows_; ++c) {
        std::size_t piv = rank;
        while (piv < rows_ && !m.get(piv, c)) ++piv;
        if (piv == rows_) continue;
        m.swap_rows(rank, piv);
        for (std::size_t r = 0; r < rows_; ++r)
            if (r != rank && m.get(r, c)) m.xor_rows(r, rank);
        ++rank;
    }
    return rank;
}

BitVec encode(const BitVec& info, const LinearCode& code) {
    if (info.size() != code.k) throw std::invalid_argument("info length != k");
    std::vector<std::uint64_t> acc(code.generator.words_per_row(), 0);
    for (std::size_t i = 0; i < code.k; ++i) {
        if (!info[i]) continue;
        auto row = code.generator.row(i);
        for (std::size_t w = 0; w < acc.size(); ++w) acc[w] ^= row[w];
    }
    BitVec c(code.n);
    for (std::size_t j = 0; j < code.n; ++j) c[j] = (acc[j >> 6] >> (j & 63)) & 1ULL;
    return c;
}

GaussianEliminationResult gaussian_eliminate(const BinaryMatrix& m, const Permutation& column_order) {
    if (column_order.size() != m.cols()) throw std::invalid_argument("column order size mismatch");
    BinaryMatrix g = m.columns(column_order);
    const std::size_t k = g.rows(), n = g.cols();
    Permutation pi2 = identity_perm(n);
    for (std::size_t j = 0; j < k; ++j) {
        // nearest column at or right of j with a pivot in rows j..k-1
        std::size_t cc = j, piv = k;
        for (; cc < n; ++cc) {
            piv = j;
            while (piv < k && !g.get(piv, cc)) ++piv;
            if (piv < k) break;
        }
        if (cc == n) throw std::runtime_error("gaussian_eliminate: rank-deficient matrix");
        if (cc != j) {
            g.swap_cols(j, cc);
            std::swap(pi2[j], pi2[cc]);
        }
        g.swap_rows(j, piv);
        for (std::size_t r = 0; r < k; ++r)
            if (r != j && g.get(r, j)) g.xor_rows(r, j);
    }
    return {std::move(g), std::move(pi2)};
}

BinaryMatrix parity_check_matrix(const LinearCode& code) {
    // [I_k | P] under some column permutation; H = [P^T | I_{n-k}] mapped back.
    auto ge = gaussian_eliminate(code.generator, identity_perm(code.n));
    const std::size_t n = code.n, k = code.k;
    BinaryMatrix h(n - k, n);
    for (std::size_t r = 0; r < n - k; ++r) {
        for (std::size_t j = 0; j < k; ++j)
            if (ge.systematic.get(j, k + r)) h.set(r, ge.pi2[j], true);
        h.set(r, ge.pi2[k + r], true);
    }
    return h;
}

bool word_in_code(const BitVec& word, const BinaryMatrix& parity_check) {
    if (word.size() != parity_check.cols()) throw std::invalid_argument("word length mismatch");
    for (std::size_t r = 0; r < parity_check.rows(); ++r) {
        int s = 0;
        for (std::size_t c = 0; c < word.size(); ++c)
            if (word[c] && parity_check.get(r, c)) s ^= 1;
        if (s) return false;
    }
    return true;
}

LinearCode load_code(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open code file: " + path.string());
    auto next_line = [&](std::string& out) -> bool {
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto pos = line.find_first_not_of(" \t\r\n");
            if (pos == std::string::npos) continue;
            const auto end = line.find_last_not_of(" \t\r\n");
            out = line.substr(pos, end - pos + 1);
            return true;
        }
        return false;
    };

    std::string header;
    if (!next_line(header)) throw std::runtime_error("empty code file: " + path.string());
    std::istringstream hs(header);
    long long n = 0, k = 0, d = 0;
    if (!(hs >> n >> k)) throw std::runtime_error("bad header in " + path.string());
    hs >> d;
    if (n < 2 || k < 1 || k >= n) throw std::runtime_error("bad dimensions in " + path.string());

    LinearCode code;
    code.n = static_cast<std::size_t>(n);
    code.k = static_cast<std::size_t>(k);
    code.d_hamming = static_cast<int>(d);
    code.generator = BinaryMatrix(code.k, code.n);
    for (std::size_t r = 0; r < code.k; ++r) {
        std::string row;
        if (!next_line(row)) throw std::runtime_error("truncated code file: " + path.string());
        if (row.size() != code.n) throw std::runtime_error("row length mismatch in " + path.string());
        for (std::size_t c = 0; c < code.n; ++c) {
            if (row[c] == '1')
                code.generator.set(r, c, true);
            else if (row[c] != '0')
                throw std::runtime_error("invalid character in " + path.string());
        }
    }
    if (code.generator.rank() != code.k)
        throw std::runtime_error("generator not full rank in " + path.string());
    return code;
}

std::filesystem::path code_fixture_path(const std::string& filename) {
    if (const char* env = std::getenv("NOMA_OSD_DATA"))
        return std::filesystem::path(env) / filename;
#ifdef NOMAOSD_DATA_DIR
    return std::filesystem::path(NOMAOSD_DATA_DIR) / filename;
#else
    return std::filesystem::path("data/codes") / filename;
#endif
}

}  // namespace nomaosd
