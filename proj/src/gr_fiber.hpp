#pragma once

// Per-chain linear algebra for graded syntomic fibers. Cells of the D-twist
// are linked by beta -> p beta + (p-1) D (the cell shift of Frobenius); gr^m
// of the fiber splits into independent blocks, one per maximal chain.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdr/syntomic.hpp"

namespace mdr::detail {

int binomial(int n, int k);
int ceil_div(int a, int b);

// T_0-exponent of gr^m J^[r-j] (x) omega^j (j > r: the whole ring).
int syntomic_level(int p, int e, int r, int j, int m);

MultiIndex frobenius_successor(const MultiIndex& beta, const Divisor& D, int p);
std::optional<MultiIndex> frobenius_predecessor(const MultiIndex& beta, const Divisor& D, int p);

// Cells carry exponent 0 at T_0.
struct Chain {
    std::vector<MultiIndex> cells;
    bool fixed = false;  // D = 0 and beta = 0: the cell is its own successor
};

// The first cell has all Koszul coefficients divisible by p and the chain is
// not the fixed one. Such chains carry the obstruction module.
bool resonant_start(const Chain& c, const Divisor& D, int p);

// Everything the per-chain linear algebra depends on.
struct ChainSig {
    std::vector<int> residues;  // (c_0 + D) mod p on T_1..T_d
    int length = 0;
    bool fixed = false;
    bool operator<(const ChainSig& o) const;
    long long code(int p) const;
};

struct ChainClass {
    ChainSig sig;
    Chain rep;
    int count = 0;
};

struct ChainCensus {
    std::vector<ChainClass> classes;
    int cells = 0;
    int resonant_starts = 0;  // non-fixed chains starting at a resonant cell
};

ChainSig signature_of(const Chain& c, const Divisor& D, int p);
Chain chain_from_start(const MultiIndex& start, const Divisor& D, int p, int window);
// The chain through a cell and the cell's position on it.
Chain chain_through(const MultiIndex& cell, const Divisor& D, int p, int window, int* position);
// Cached per (p, d, window, D) on the calling thread.
const ChainCensus& chain_census(const Chart& chart, const Divisor& D);

// F_p block of x -> c x (or c x^p) on F_{p^s} in the basis 1, t, ..., t^{s-1}.
std::vector<std::vector<Scalar>> scalar_block(const ScalarRing& R, Scalar c, bool semilinear);
Scalar field_basis(const ScalarRing& R, int u);

// gr^m of A (degrees q-1..q+1) and B (degrees q-2..q) on one chain, expanded
// to F_p. A vector of A^j lists, per chain cell, the basis of the full-mode
// complex in degree j, each coordinate split into s digits.
//
// In degrees where 1 - phi is -phi alone, B^j also carries the successor of
// the last cell (outside the window). There phi pairs A at cell i with B at
// cell i + 1, and the extra cell keeps the pairing exact at the cut.
struct ChainFiber {
    RingPtr fp;
    int s = 1;
    int q = 0;
    int ncells = 0;
    MultiIndex next_cell;               // successor of the last chain cell
    std::map<int, int> a_rank, b_rank;  // per-cell F_{p^s}-rank, 0 if absent
    std::map<int, int> b_extra;         // 1 where B^j carries next_cell
    std::map<int, FpMatrix> dA, dB, f;  // dA[j]: A^j -> A^{j+1}, f[j]: A^j -> B^j

    int b_cells(int j) const;
    int a_dim(int j) const;
    int b_dim(int j) const;
    int f_dim(int j) const { return a_dim(j) + b_dim(j - 1); }
    // F^j = A^j + B^{j-1} -> F^{j+1}, d(a, b) = (da, f a - db).
    FpMatrix dF(int j) const;
    // Offset of (cell, basis index) inside A^j or B^j.
    int a_offset(int j, int cell, int idx) const { return (cell * a_rank.at(j) + idx) * s; }
    int b_offset(int j, int cell, int idx) const { return (cell * b_rank.at(j) + idx) * s; }
};

// Throws StructuralError if f is not a chain map.
ChainFiber build_chain_fiber(const SyntomicGrPiece& P, const Chain& chain);

struct FiberDims {
    int hF_qm1 = 0, hF_q = 0;
    int hA_qm1 = 0, hA_q = 0;
    int hB_qm2 = 0, hB_qm1 = 0, hB_q = 0;
    int rk_qm1 = 0, rk_q = 0;  // ranks of H^j(A) -> H^j(B)
    int k_q = 0, k_qm1 = 0;     // kernels
    int c_qm1 = 0, c_qm2 = 0;   // cokernels
};
FiberDims analyze(const ChainFiber& F);

// Subspaces of F^q used for quotients: cocycles, coboundaries, and the image
// of (0, Z^{q-1}(B)).
struct FiberSubspaces {
    std::vector<Vec> Z, B, K;
};
FiberSubspaces fiber_subspaces(const ChainFiber& F);

// Rank of the map induced by M between Z/(B+K) and the target quotient.
struct QuotientMapRank {
    int source_dim = 0;
    int target_dim = 0;
    int rank = 0;
};
QuotientMapRank quotient_map_rank(const FpMatrix& M, const FiberSubspaces& src, const FiberSubspaces& tgt);

// Coordinates of a coefficient form (exponent `level` at T_0) in A^j or B^j
// of the chain; terms off the chain or off the level are ignored.
Vec chain_vector(const ChainFiber& F, const Chain& chain, const GradedComplex& C, int j, bool b_side,
                 const LogForm& w);

// Kernel of x -> x - a C^{-1} x (mod B) on Z^q of a relative or special fiber
// complex, restricted to the chain: F_p-dimension.
int chain_semilinear_kernel(const GradedComplex& C, const Chain& chain, int q, Scalar a);

}  // namespace mdr::detail
