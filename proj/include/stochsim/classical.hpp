#ifndef STOCHSIM_CLASSICAL_HPP
#define STOCHSIM_CLASSICAL_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "stochsim/errors.hpp"
#include "stochsim/types.hpp"

namespace stochsim::hmm {

//=========================================================================
// Edge-emitting hidden Markov models
//=========================================================================

// Joint transition/emission tensor: T[x](alpha, beta) is the probability of
// emitting symbol x and moving to memory state alpha, given state beta.
// Columns are stochastic over the joint (x, alpha) index.
struct TransitionTensor {
    int d = 0;
    int D = 0;
    std::vector<RealMatrix> T;

    const RealMatrix &operator[](int x) const { return T[static_cast<std::size_t>(x)]; }
    RealMatrix &operator[](int x) { return T[static_cast<std::size_t>(x)]; }

    static TransitionTensor zeros(int d, int D);

    // Non-negativity and column-sum checks.
    void validate(double tol = 1e-9) const;

    // Transition matrix summed over symbols.
    RealMatrix transition_matrix() const;
    // d x D emission marginal.
    RealMatrix emission_matrix() const;
};

// Factorized model T[x] = J * diag(E^x): symbol and next state independent
// given the previous state.
TransitionTensor factorized_tensor(const RealMatrix &J, const RealMatrix &E);

struct ClassicalSummary {
    RealMatrix J; // D x D, column stochastic
    RealMatrix E; // d x D, column stochastic
    RealVector pi;
    bool unifilar = false;
};

// J, E, the steady state of J, and the unifilarity flag. Throws
// DegeneracyError when the steady state is not unique.
ClassicalSummary summarize(const TransitionTensor &T, double unifilar_tol = 1e-12);

//=========================================================================
// Probabilities, conditioning, sampling
//=========================================================================

double sequence_probability(const TransitionTensor &T, const RealVector &p_init,
                            const SymbolSequence &seq);

// Memory distribution after observing `past`, starting from p0 (uniform when
// absent). Throws ImpossiblePastError when the past has probability zero.
RealVector conditional_initial(const TransitionTensor &T, const SymbolSequence &past,
                               const std::optional<RealVector> &p0 = std::nullopt);

SymbolSequence sample_classical(const TransitionTensor &T, const RealVector &p_init,
                                long length, std::uint64_t seed);

// Exact distribution over all d^L continuations from memory distribution p.
// Entry index is the base-d number with the first symbol as the most
// significant digit.
RealVector enumerate_sequence_probabilities(const TransitionTensor &T, const RealVector &p,
                                            int L);

//=========================================================================
// Compression
//=========================================================================

struct EntropyCompression {
    TransitionTensor tensor;
    RealVector compressed_steady;   // the steady state of `tensor` by construction
    std::vector<int> permutation;   // original index of each steady-sorted state
};

// Rank-reduction by an encode/decode pair built on the steady state; the
// compressed chain keeps the renormalized top-D' steady-state weights.
EntropyCompression compress_entropy_preserving(const TransitionTensor &T, int D_new);

// SVD of the frequency matrix J diag(pi), rotated and truncated, then
// projected back onto valid transition tensors.
TransitionTensor compress_spectral(const TransitionTensor &T, int D_new);

//=========================================================================
// Baum-Welch fitting of factorized models
//=========================================================================

struct BaumWelchConfig {
    int max_iters = 500;
    double tol = 1e-8; // on |delta log-likelihood|
    std::uint64_t seed = 0;
};

struct BaumWelchResult {
    RealMatrix J;
    RealMatrix E;
    std::vector<double> log_likelihood; // one entry per EM iteration
    bool reseeded = false;              // a zero-count state was reset to uniform
};

BaumWelchResult baum_welch(const SymbolSequence &seq, int D,
                           const std::optional<std::pair<RealMatrix, RealMatrix>> &init = std::nullopt,
                           const BaumWelchConfig &config = {});

//=========================================================================
// Classical accuracy measures
//=========================================================================

// Sum over all d^L outcome strings of sqrt(P * Pbar); enumeration guarded.
double bhattacharyya_exhaustive(const TransitionTensor &T, const TransitionTensor &Tbar,
                                const RealVector &p, const RealVector &pbar, int L);

struct SimilarityRate {
    double rate;           // -log of cosine-normalized leading modulus
    double cross_modulus;  // |lambda(T, Tbar)|
    double self_modulus_a; // lambda(T, T)
    double self_modulus_b; // lambda(Tbar, Tbar)
};

// Asymptotic decay rate of the cosine similarity between output
// distributions, from the leading eigenvalues of the pairing maps.
SimilarityRate similarity_decay_rate(const TransitionTensor &T, const TransitionTensor &Tbar);

} // namespace stochsim::hmm

#endif
