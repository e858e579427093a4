#ifndef STOCHSIM_QUANTUM_HPP
#define STOCHSIM_QUANTUM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "stochsim/classical.hpp"
#include "stochsim/errors.hpp"
#include "stochsim/types.hpp"

namespace stochsim::qsim {

//=========================================================================
// Matrix-product simulators
//=========================================================================

// Per-symbol memory matrices of a matrix-product simulator. When
// `normalized` is set the family satisfies the Kraus identity
// sum_x K^x† K^x = 1 (within 1e-9).
struct QuantumTensor {
    int d = 0;
    int D = 0;
    std::vector<Matrix> K;
    bool normalized = false;

    const Matrix &operator[](int x) const { return K[static_cast<std::size_t>(x)]; }
    Matrix &operator[](int x) { return K[static_cast<std::size_t>(x)]; }

    static QuantumTensor zeros(int d, int D);

    // Frobenius norm of sum_x K^x† K^x - 1.
    double kraus_defect() const;
    void validate(double tol = 1e-9) const;
};

// Pure (unit vector) or mixed (PSD trace-one matrix) memory register state.
struct MemoryState {
    std::optional<Vector> pure;
    std::optional<Matrix> mixed;

    static MemoryState make_pure(Vector v);
    static MemoryState make_mixed(Matrix m);
    bool is_pure() const { return pure.has_value(); }
    void validate(double tol = 1e-9) const;
};

//=========================================================================
// Construction and normalization
//=========================================================================

// Entrywise square root of a unifilar transition tensor; refuses
// non-unifilar input, for which the output-distribution identity fails.
QuantumTensor from_unifilar(const hmm::TransitionTensor &T);

struct NormalizeResult {
    QuantumTensor tensor; // normalized; D may shrink to the numerical rank
    double mu = 0.0;      // leading eigenvalue of the dual transfer map
    Matrix W;             // gauge factor, rank x D_in
    Matrix W_pinv;        // D_in x rank
    bool rank_deficient = false;
};

// Gauge the tensor so it becomes a normalized Kraus family: find the leading
// eigenoperator G of Y -> sum_x A^x† Y A^x, factor G = W†W, and conjugate by
// W with the eigenvalue scaled out.
NormalizeResult mps_normalize(const QuantumTensor &A, double tol = 1e-12);

// Truncate the memory to the D' leading eigendirections of the steady state,
// then renormalize.
QuantumTensor mps_compress(const QuantumTensor &A, int D_new);

//=========================================================================
// Steady states and entropies
//=========================================================================

// Hermitian PSD trace-one fixed point of rho -> sum_x K^x rho K^x†.
Matrix steady_state_quantum(const QuantumTensor &K);

double memory_entropy(const QuantumTensor &K);

// Entropy of the renormalized top-`keep` steady-state eigenvalues.
double truncated_spectrum_entropy(const QuantumTensor &K, int keep);

// Pure state sum_i sqrt(lambda_i) |lambda_i> built on the steady state.
Vector steady_coherent_state(const QuantumTensor &K);

//=========================================================================
// Output distribution
//=========================================================================

double sequence_probability_quantum(const QuantumTensor &K, const Vector &phi,
                                    const SymbolSequence &seq);

SymbolSequence sample_quantum(const QuantumTensor &K, const Vector &phi, long length,
                              std::uint64_t seed);

// Distribution over all d^L strings from a pure state (most significant
// symbol first, as in hmm::enumerate_sequence_probabilities).
RealVector enumerate_sequence_probabilities_quantum(const QuantumTensor &K, const Vector &phi,
                                                    int L);

//=========================================================================
// Accuracy measures
//=========================================================================

// Uhlmann fidelity between the length-L output states of two simulators with
// pure initial memory states, via L applications of Y -> sum_x A^x Y B^x†.
double fidelity(const QuantumTensor &A, const QuantumTensor &B, const Vector &sigma_a,
                const Vector &sigma_b, int L);

// Asymptotic fidelity decay rate per step (natural log).
double divergence_density(const QuantumTensor &A, const QuantumTensor &B);

// Initial state for the reduced simulator maximizing the asymptotic overlap:
// the leading left eigenoperator applied to sigma_a.
Vector optimal_compressed_initial_state(const QuantumTensor &A, const QuantumTensor &B,
                                        const Vector &sigma_a);

// Fidelity between steady-state purifications after L steps.
double steady_fidelity(const QuantumTensor &A, const QuantumTensor &B, int L);

struct AccuracyReport {
    std::vector<std::pair<int, double>> fidelity_at_length;
    double divergence = 0.0;
    std::optional<double> steady_fidelity_at_length;
    bool degenerate_spectrum = false;
};

AccuracyReport accuracy_report(const QuantumTensor &A, const QuantumTensor &B,
                               const Vector &sigma_a, const Vector &sigma_b,
                               const std::vector<int> &lengths,
                               std::optional<int> steady_length = std::nullopt);

//=========================================================================
// Equivalence checks
//=========================================================================

struct EquivalenceReport {
    double max_deviation = 0.0;
    int max_length = 0;
};

// Non-normalized simulators reproduce the normalized one's distribution once
// the left operator mu^{-L/2} W / ||W sigma|| is attached.
EquivalenceReport nonnormalized_equivalence_check(const QuantumTensor &A_raw,
                                                  const Vector &sigma, int max_length);

// The diagonal matrix-product-density-operator construction reproduces the
// classical output distribution for arbitrary (also non-unifilar) tensors.
EquivalenceReport nonunifilar_probability_check(const hmm::TransitionTensor &T,
                                                int max_length);

} // namespace stochsim::qsim

#endif
