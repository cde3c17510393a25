#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nomaosd {

using BitVec = std::vector<std::uint8_t>;          // one bit per entry, values 0/1
using Permutation = std::vector<std::uint32_t>;    // perm[i] = source index of slot i

Permutation identity_perm(std::size_t n);
Permutation invert_perm(const Permutation& p);
// composition: result[i] = inner[outer[i]] (apply inner first, then outer)
Permutation compose_perm(const Permutation& inner, const Permutation& outer);

// Dense GF(2) matrix, word-packed row-major. Row ops are whole-word XORs.
class BinaryMatrix {
  public:
    BinaryMatrix() = default;
    BinaryMatrix(std::size_t rows, std::size_t cols);
    static BinaryMatrix from_rows(const std::vector<BitVec>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t words_per_row() const { return words_; }

    bool get(std::size_t r, std::size_t c) const {
        return (bits_[r * words_ + (c >> 6)] >> (c & 63)) & 1ULL;
    }
    void set(std::size_t r, std::size_t c, bool v) {
        std::uint64_t& w = bits_[r * words_ + (c >> 6)];
        const std::uint64_t m = 1ULL << (c & 63);
        w = v ? (w | m) : (w & ~m);
    }

    std::span<const std::uint64_t> row(std::size_t r) const {
        return {bits_.data() + r * words_, words_};
    }
    void xor_rows(std::size_t dst, std::size_t src);
    void swap_rows(std::size_t a, std::size_t b);
    void swap_cols(std::size_t a, std::size_t b);

    BitVec row_bits(std::size_t r) const;
    BinaryMatrix columns(const Permutation& perm) const;  // out col i = this col perm[i]
    BinaryMatrix submatrix(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) const;

    std::size_t rank() const;
    bool operator==(const BinaryMatrix& o) const = default;

  private:
    std::size_t rows_ = 0, cols_ = 0, words_ = 0;
    std::vector<std::uint64_t> bits_;
};

struct LinearCode {
    std::size_t n = 0;       // codeword length
    std::size_t k = 0;       // information length
    int d_hamming = 0;       // minimum distance metadata, 0 = unknown
    BinaryMatrix generator;  // k x n, full row rank
};

struct GaussianEliminationResult {
    BinaryMatrix systematic;  // [I_k | P] under the composed column order
    Permutation pi2;          // extra column swaps applied on top of the input order
};

// c = b * G over GF(2). Throws std::invalid_argument on length mismatch.
BitVec encode(const BitVec& info, const LinearCode& code);

// Row-reduce matrix (columns taken in `column_order`) to [I_k | P]. When the
// pivot at ordered column j fails, the column is swapped with the nearest
// independent column to its right; those swaps are returned in pi2.
// Throws std::runtime_error if the matrix is rank deficient.
GaussianEliminationResult gaussian_eliminate(const BinaryMatrix& m, const Permutation& column_order);

// Parity-check matrix (n-k) x n derived from the generator by elimination.
BinaryMatrix parity_check_matrix(const LinearCode& code);

// Syndrome test against a precomputed parity-check matrix.
bool word_in_code(const BitVec& word, const BinaryMatrix& parity_check);

// Matrix file format: 'n k [d]' header line, then k rows of n characters in
// {0,1}. '#' starts a comment. Verifies dimensions and full rank.
LinearCode load_code(const std::filesystem::path& path);

// Fixture lookup: $NOMA_OSD_DATA overrides the built-in data directory.
std::filesystem::path code_fixture_path(const std::string& filename);

}  // namespace nomaosd
