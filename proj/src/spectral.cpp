#include "stochsim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "stochsim/rng.hpp"

namespace stochsim::spectral {

namespace {

double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

} // namespace

//=========================================================================
// TransferMap
//=========================================================================

TransferMap::TransferMap(std::vector<Matrix> left, std::vector<Matrix> right,
                         ConjugationMode mode)
    : left_(std::move(left)), right_(std::move(right)), mode_(mode) {
    if (left_.empty() || left_.size() != right_.size())
        throw ShapeError("transfer map: tensors must share a nonempty alphabet");
    for (const auto &m : left_)
        if (m.rows() != left_[0].rows() || m.cols() != left_[0].rows())
            throw ShapeError("transfer map: left tensor matrices must be square and uniform");
    for (const auto &m : right_)
        if (m.rows() != right_[0].rows() || m.cols() != right_[0].rows())
            throw ShapeError("transfer map: right tensor matrices must be square and uniform");
    rows_ = left_[0].rows();
    cols_ = right_[0].rows();
}

TransferMap TransferMap::channel(const std::vector<Matrix> &kraus) {
    return TransferMap(kraus, kraus, ConjugationMode::AdjointOnRight);
}

TransferMap TransferMap::dual(const std::vector<Matrix> &kraus) {
    return TransferMap(kraus, kraus, ConjugationMode::AdjointMap);
}

Matrix TransferMap::apply(const Matrix &Y) const {
    if (Y.rows() != rows_ || Y.cols() != cols_)
        throw ShapeError("transfer map: operand has wrong shape");
    Matrix out = Matrix::Zero(rows_, cols_);
    switch (mode_) {
    case ConjugationMode::AdjointOnRight:
        for (std::size_t x = 0; x < left_.size(); ++x)
            out.noalias() += left_[x] * Y * right_[x].adjoint();
        break;
    case ConjugationMode::AdjointMap:
        for (std::size_t x = 0; x < left_.size(); ++x)
            out.noalias() += left_[x].adjoint() * Y * right_[x];
        break;
    case ConjugationMode::TransposeOnRight:
        for (std::size_t x = 0; x < left_.size(); ++x)
            out.noalias() += left_[x] * Y * right_[x].transpose();
        break;
    }
    return out;
}

TransferMap TransferMap::reversed() const {
    // Left eigenoperators pair bilinearly: tr[L map(Y)] = lambda tr[L Y].
    switch (mode_) {
    case ConjugationMode::AdjointOnRight:
        // L satisfies sum_x B^x† L A^x = lambda L
        return TransferMap(right_, left_, ConjugationMode::AdjointMap);
    case ConjugationMode::AdjointMap:
        // L satisfies sum_x B^x L A^x† = lambda L
        return TransferMap(right_, left_, ConjugationMode::AdjointOnRight);
    case ConjugationMode::TransposeOnRight: {
        // L satisfies sum_x B^xT L A^x = lambda L
        std::vector<Matrix> bt, at;
        bt.reserve(right_.size());
        at.reserve(left_.size());
        for (const auto &m : right_) bt.push_back(m.transpose());
        for (const auto &m : left_) at.push_back(m.transpose());
        return TransferMap(bt, at, ConjugationMode::TransposeOnRight);
    }
    }
    throw ArgumentError("transfer map: unknown conjugation mode");
}

Matrix TransferMap::matricize() const {
    // Column-stacked operands: vec(A Y C) = (C^T kron A) vec(Y).
    const Eigen::Index n = operand_dim();
    Matrix M = Matrix::Zero(n, n);
    for (std::size_t x = 0; x < left_.size(); ++x) {
        Matrix A, CT; // map(Y) = A Y C, CT = C^T
        switch (mode_) {
        case ConjugationMode::AdjointOnRight:
            A = left_[x];
            CT = right_[x].conjugate();
            break;
        case ConjugationMode::AdjointMap:
            A = left_[x].adjoint();
            CT = right_[x].transpose();
            break;
        case ConjugationMode::TransposeOnRight:
            A = left_[x];
            CT = right_[x];
            break;
        }
        for (Eigen::Index i = 0; i < CT.rows(); ++i)
            for (Eigen::Index j = 0; j < CT.cols(); ++j)
                M.block(i * rows_, j * rows_, rows_, rows_) += CT(i, j) * A;
    }
    return M;
}

//=========================================================================
// Dominant eigenpair
//=========================================================================

namespace {

// Largest operand dimension solved by dense matricization.
constexpr Eigen::Index kDenseDimLimit = 64;

Matrix unstack(const Vector &v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

SpectralResult dense_dominant(const TransferMap &map, const EigOptions &opts) {
    const Matrix M = map.matricize();
    Eigen::ComplexEigenSolver<Matrix> solver(M);
    if (solver.info() != Eigen::Success)
        throw ConvergenceError("dense eigensolver failed", Matrix());

    const Vector evals = solver.eigenvalues();
    std::vector<Eigen::Index> order(evals.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(evals(a)) > std::abs(evals(b));
    });

    SpectralResult res;
    const Eigen::Index top = order[0];
    res.eigenvalue = evals(top);
    const double mod = std::abs(res.eigenvalue);
    const double tie = opts.tol * std::max(1.0, mod);

    std::vector<Eigen::Index> leading; // every index within the modulus tie
    for (Eigen::Index k : order)
        if (mod - std::abs(evals(k)) <= tie) leading.push_back(k);
    res.degenerate = leading.size() > 1;

    Vector v = solver.eigenvectors().col(top);
    if (res.degenerate && opts.hint) {
        // Any combination inside one equal-eigenvalue eigenspace is a valid
        // eigenoperator; among the tied-modulus groups pick the one carrying
        // the largest share of the caller's hint.
        const Vector h = Eigen::Map<const Vector>(opts.hint->data(), opts.hint->size());
        std::vector<bool> used(leading.size(), false);
        double best_norm = -1.0;
        for (std::size_t g = 0; g < leading.size(); ++g) {
            if (used[g]) continue;
            Matrix basis(h.size(), 0);
            for (std::size_t k = g; k < leading.size(); ++k) {
                if (std::abs(evals(leading[k]) - evals(leading[g])) > tie) continue;
                used[k] = true;
                basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
                basis.col(basis.cols() - 1) = solver.eigenvectors().col(leading[k]);
            }
            // Least-squares projection handles a non-orthogonal eigenbasis.
            const Vector coeff = basis.colPivHouseholderQr().solve(h);
            const Vector proj = basis * coeff;
            if (proj.norm() > best_norm) {
                best_norm = proj.norm();
                if (proj.norm() > 1e-8 * h.norm()) {
                    v = proj;
                    res.eigenvalue = evals(leading[g]);
                }
            }
        }
    }
    v.normalize();
    res.right_eigenoperator = unstack(v, map.operand_rows(), map.operand_cols());
    res.converged = true;
    res.iterations = 0;
    return res;
}

SpectralResult power_dominant(const TransferMap &map, const EigOptions &opts) {
    Matrix Y;
    if (opts.hint && opts.hint->rows() == map.operand_rows() &&
        opts.hint->cols() == map.operand_cols() && opts.hint->norm() > 0.0) {
        Y = *opts.hint;
    } else {
        Rng rng(0x5eed1234abcdefULL);
        Y.resize(map.operand_rows(), map.operand_cols());
        for (Eigen::Index j = 0; j < Y.cols(); ++j)
            for (Eigen::Index i = 0; i < Y.rows(); ++i) Y(i, j) = rng.normal_complex();
    }
    Y /= Y.norm();

    SpectralResult res;
    Complex lambda(0.0, 0.0);
    for (int it = 1; it <= opts.max_iter; ++it) {
        Matrix Z = map.apply(Y);
        lambda = (Y.conjugate().cwiseProduct(Z)).sum(); // <Y, Z> with ||Y||_F = 1
        const double resid = (Z - lambda * Y).norm();
        const double zn = Z.norm();
        if (resid <= opts.tol) {
            res.eigenvalue = lambda;
            res.right_eigenoperator = Y;
            res.converged = true;
            res.iterations = it;
            return res;
        }
        if (zn == 0.0)
            throw ConvergenceError("power iteration annihilated the iterate", Y);
        Y = Z / zn;
    }
    throw ConvergenceError("power iteration did not converge", Y);
}

} // namespace

SpectralResult dominant_eigenpair(const TransferMap &map, const EigOptions &opts) {
    if (!(opts.tol > 0.0))
        throw ArgumentError("dominant_eigenpair: tol must be positive");
    SpectralResult res = map.operand_dim() <= kDenseDimLimit ? dense_dominant(map, opts)
                                                             : power_dominant(map, opts);
    if (opts.compute_left) {
        EigOptions lo;
        lo.tol = opts.tol;
        lo.max_iter = opts.max_iter;
        SpectralResult left = dominant_eigenpair(map.reversed(), lo);
        res.left_eigenoperator = left.right_eigenoperator;
    }
    return res;
}

//=========================================================================
// Norms and entropies
//=========================================================================

double trace_norm(const Matrix &Y) {
    if (Y.rows() == 0 || Y.cols() == 0) return 0.0;
    if (std::max(Y.rows(), Y.cols()) <= 16)
        return Eigen::JacobiSVD<Matrix>(Y).singularValues().sum();
    return Eigen::BDCSVD<Matrix>(Y).singularValues().sum();
}

double shannon_entropy(const RealVector &p) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) < -1e-12)
            throw DomainError("shannon_entropy: negative probability entry");
        sum += p(i);
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw DomainError("shannon_entropy: probabilities do not sum to one");
    double h = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) h -= xlog2x(std::max(p(i), 0.0));
    return h;
}

Matrix hermitize(const Matrix &G) {
    Complex t = G.trace();
    if (std::abs(t) < 1e-14 * std::max(1.0, G.norm())) {
        // Trace-free phase reference: use the largest entry instead.
        Eigen::Index mi = 0, mj = 0;
        G.cwiseAbs().maxCoeff(&mi, &mj);
        t = G(mi, mj);
    }
    Matrix aligned = G;
    if (std::abs(t) > 0.0) aligned *= std::polar(1.0, -std::arg(t));
    return 0.5 * (aligned + aligned.adjoint());
}

RealVector clipped_eigenvalues(const Matrix &rho, double neg_tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()),
                                             Eigen::EigenvaluesOnly);
    RealVector w = es.eigenvalues();
    if (w.size() > 0 && w(0) < -neg_tol)
        throw DomainError("matrix has an eigenvalue below the PSD tolerance");
    RealVector out(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
        out(i) = std::max(w(w.size() - 1 - i), 0.0); // descending
    return out;
}

double von_neumann_entropy(const Matrix &rho) {
    if (rho.rows() != rho.cols())
        throw ShapeError("von_neumann_entropy: matrix must be square");
    if ((rho - rho.adjoint()).norm() > 1e-9 * std::max(1.0, rho.norm()))
        throw DomainError("von_neumann_entropy: matrix is not Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > 1e-9 || std::abs(rho.trace().imag()) > 1e-9)
        throw DomainError("von_neumann_entropy: trace is not one");
    const RealVector w = clipped_eigenvalues(rho);
    double h = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) h -= xlog2x(w(i));
    return h;
}

PsdSqrt psd_sqrt_and_inverse(const Matrix &G, double rank_tol) {
    if (G.rows() != G.cols())
        throw ShapeError("psd_sqrt_and_inverse: matrix must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (G + G.adjoint()));
    if (es.info() != Eigen::Success)
        throw ConvergenceError("psd_sqrt_and_inverse: eigensolver failed", G);
    const RealVector s = es.eigenvalues(); // ascending
    const double smax = s(s.size() - 1);
    if (!(smax > 0.0))
        throw DomainError("psd_sqrt_and_inverse: matrix has no positive eigenvalue");

    const double cutoff = rank_tol * smax;
    // Descending eigenvalues with ties kept in the solver's ascending-index
    // order, so G = c*I factors with W diagonal.
    std::vector<Eigen::Index> keep(static_cast<std::size_t>(s.size()));
    std::iota(keep.begin(), keep.end(), 0);
    std::stable_sort(keep.begin(), keep.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return s(a) > s(b); });
    keep.erase(std::remove_if(keep.begin(), keep.end(),
                              [&](Eigen::Index i) { return !(s(i) > cutoff); }),
               keep.end());

    PsdSqrt out;
    out.rank = static_cast<Eigen::Index>(keep.size());
    out.rank_deficient = out.rank < G.rows();
    out.eigenvalues.resize(out.rank);
    out.W.resize(out.rank, G.rows());
    out.W_pinv.resize(G.rows(), out.rank);
    for (Eigen::Index k = 0; k < out.rank; ++k) {
        const double sk = s(keep[k]);
        out.eigenvalues(k) = sk;
        out.W.row(k) = std::sqrt(sk) * es.eigenvectors().col(keep[k]).adjoint();
        out.W_pinv.col(k) = es.eigenvectors().col(keep[k]) / std::sqrt(sk);
    }
    return out;
}

} // namespace stochsim::spectral
