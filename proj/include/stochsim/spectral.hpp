#ifndef STOCHSIM_SPECTRAL_HPP
#define STOCHSIM_SPECTRAL_HPP

#include <optional>
#include <vector>

#include "stochsim/errors.hpp"
#include "stochsim/types.hpp"

namespace stochsim::spectral {

//=========================================================================
// Transfer maps (superoperators on rectangular memory operators)
//=========================================================================

enum class ConjugationMode {
    AdjointOnRight,   // Y -> sum_x A^x Y B^x†
    AdjointMap,       // Y -> sum_x A^x† Y B^x
    TransposeOnRight, // Y -> sum_x A^x Y B^xT
};

// Bilinear map between spaces of D_A x D_B matrices, defined by two
// per-symbol matrix families sharing the alphabet size d.
class TransferMap {
  public:
    TransferMap(std::vector<Matrix> left, std::vector<Matrix> right,
                ConjugationMode mode);

    // Same-family convenience: Y -> sum_x A^x Y A^x† (or selected variant).
    static TransferMap channel(const std::vector<Matrix> &kraus);
    static TransferMap dual(const std::vector<Matrix> &kraus);

    Matrix apply(const Matrix &Y) const;

    // Rows/cols of operands this map acts on.
    Eigen::Index operand_rows() const { return rows_; }
    Eigen::Index operand_cols() const { return cols_; }
    Eigen::Index operand_dim() const { return rows_ * cols_; }
    int alphabet() const { return static_cast<int>(left_.size()); }

    // Map whose right eigenoperators are this map's left eigenoperators
    // (same spectrum, operands transposed in shape).
    TransferMap reversed() const;

    // Dense (rows*cols)^2 matricization acting on column-stacked operands.
    Matrix matricize() const;

    const std::vector<Matrix> &left_tensor() const { return left_; }
    const std::vector<Matrix> &right_tensor() const { return right_; }
    ConjugationMode mode() const { return mode_; }

  private:
    std::vector<Matrix> left_, right_;
    ConjugationMode mode_;
    Eigen::Index rows_, cols_;
};

//=========================================================================
// Dominant eigenpairs
//=========================================================================

struct SpectralResult {
    Complex eigenvalue{0.0, 0.0};
    Matrix right_eigenoperator; // unit Frobenius norm
    std::optional<Matrix> left_eigenoperator;
    bool converged = false;
    bool degenerate = false; // another eigenvalue within tol of the same modulus
    int iterations = 0;
};

struct EigOptions {
    std::optional<Matrix> hint;
    double tol = 1e-12;
    int max_iter = 200000;
    bool compute_left = false;
};

// Eigenvalue of largest modulus with its right (and optionally left)
// eigenoperator. Dense solve when the operand space is small, power
// iteration above that. Deterministic given the tensors and hint.
SpectralResult dominant_eigenpair(const TransferMap &map, const EigOptions &opts = {});

//=========================================================================
// Norms, entropies, factorizations
//=========================================================================

// Schatten 1-norm (sum of singular values).
double trace_norm(const Matrix &Y);

// Entropy in bits of a probability vector; zero entries contribute zero.
double shannon_entropy(const RealVector &p);

// Entropy in bits of a Hermitian PSD trace-one matrix.
double von_neumann_entropy(const Matrix &rho);

struct PsdSqrt {
    Matrix W;      // G = W† W, W is rank x D
    Matrix W_pinv; // D x rank, W_pinv W = projector onto the numerical range
    RealVector eigenvalues; // retained, descending
    Eigen::Index rank = 0;
    bool rank_deficient = false;
};

// Factor a Hermitian PSD matrix as G = W†W with W = s^{1/2} U† from the
// spectral decomposition G = U s U†. Eigenvalues below rank_tol * max(s)
// are dropped and W_pinv inverts only the retained part.
PsdSqrt psd_sqrt_and_inverse(const Matrix &G, double rank_tol = 1e-12);

// Internal helpers shared by other modules.
Matrix hermitize(const Matrix &G);           // phase-align then (G+G†)/2
RealVector clipped_eigenvalues(const Matrix &rho, double neg_tol = 1e-9);

} // namespace stochsim::spectral

#endif
