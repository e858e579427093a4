#include "stochsim/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "stochsim/rng.hpp"
#include "stochsim/spectral.hpp"

namespace stochsim::qsim {

using spectral::ConjugationMode;
using spectral::TransferMap;

namespace {

void check_symbols(const SymbolSequence &seq, int d) {
    for (int s : seq.symbols)
        if (s < 0 || s >= d)
            throw DomainError("symbol out of range for alphabet size " + std::to_string(d));
}

void check_pure(const Vector &phi, int D, const char *who) {
    if (phi.size() != D)
        throw ShapeError(std::string(who) + ": memory state has wrong dimension");
    if (std::abs(phi.norm() - 1.0) > 1e-9)
        throw DomainError(std::string(who) + ": memory state is not a unit vector");
}

} // namespace

//=========================================================================
// QuantumTensor / MemoryState
//=========================================================================

QuantumTensor QuantumTensor::zeros(int d, int D) {
    if (d < 1 || D < 1) throw ArgumentError("quantum tensor: d and D must be positive");
    QuantumTensor t;
    t.d = d;
    t.D = D;
    t.K.assign(static_cast<std::size_t>(d), Matrix::Zero(D, D));
    return t;
}

double QuantumTensor::kraus_defect() const {
    Matrix acc = Matrix::Zero(D, D);
    for (const auto &m : K) acc += m.adjoint() * m;
    return (acc - Matrix::Identity(D, D)).norm();
}

void QuantumTensor::validate(double tol) const {
    if (d < 1 || D < 1 || static_cast<int>(K.size()) != d)
        throw ShapeError("quantum tensor: inconsistent sizes");
    for (const auto &m : K)
        if (m.rows() != D || m.cols() != D)
            throw ShapeError("quantum tensor: matrix shape mismatch");
    if (normalized && kraus_defect() > tol)
        throw DomainError("quantum tensor: Kraus identity violated");
}

MemoryState MemoryState::make_pure(Vector v) {
    MemoryState s;
    s.pure = std::move(v);
    return s;
}

MemoryState MemoryState::make_mixed(Matrix m) {
    MemoryState s;
    s.mixed = std::move(m);
    return s;
}

void MemoryState::validate(double tol) const {
    if (pure.has_value() == mixed.has_value())
        throw ArgumentError("memory state: exactly one of pure/mixed must be set");
    if (pure) {
        if (std::abs(pure->norm() - 1.0) > tol)
            throw DomainError("memory state: pure vector is not normalized");
    } else {
        if ((*mixed - mixed->adjoint()).norm() > tol)
            throw DomainError("memory state: mixed state is not Hermitian");
        if (std::abs(mixed->trace().real() - 1.0) > tol)
            throw DomainError("memory state: mixed state trace is not one");
        spectral::clipped_eigenvalues(*mixed, tol);
    }
}

//=========================================================================
// Construction and normalization
//=========================================================================

QuantumTensor from_unifilar(const hmm::TransitionTensor &T) {
    T.validate();
    for (int x = 0; x < T.d; ++x)
        for (int b = 0; b < T.D; ++b) {
            int hits = 0;
            for (int a = 0; a < T.D; ++a)
                if (T[x](a, b) > 1e-12) ++hits;
            if (hits > 1)
                throw DomainError("from_unifilar: tensor is not unifilar; the matrix-product "
                                  "construction only reproduces unifilar output distributions");
        }
    QuantumTensor A = QuantumTensor::zeros(T.d, T.D);
    for (int x = 0; x < T.d; ++x)
        A[x] = T[x].cwiseSqrt().cast<Complex>();
    A.normalized = A.kraus_defect() <= 1e-12;
    return A;
}

NormalizeResult mps_normalize(const QuantumTensor &A, double tol) {
    A.validate(std::numeric_limits<double>::infinity());

    spectral::EigOptions opts;
    opts.tol = tol;
    opts.hint = Matrix::Identity(A.D, A.D);
    const auto eig = spectral::dominant_eigenpair(TransferMap::dual(A.K), opts);
    if (std::abs(eig.eigenvalue) <= 0.0)
        throw DomainError("mps_normalize: dual map has vanishing leading eigenvalue");
    if (std::abs(eig.eigenvalue.imag()) > 1e-8 * std::abs(eig.eigenvalue))
        throw DegeneracyError("mps_normalize: leading eigenvalue is not real");
    const double mu = std::abs(eig.eigenvalue);

    NormalizeResult out;
    out.mu = mu;
    const Matrix G = spectral::hermitize(eig.right_eigenoperator);

    // G proportional to the identity needs no basis rotation; keeping the
    // gauge exact here makes normalization of already-normalized input the
    // identity (up to the overall 1/sqrt(mu) scale).
    const Complex g0 = G.trace() / static_cast<double>(A.D);
    if ((G - g0 * Matrix::Identity(A.D, A.D)).norm() <= 1e-10 * G.norm()) {
        out.tensor = A;
        for (auto &m : out.tensor.K) m /= std::sqrt(mu);
        out.tensor.normalized = true;
        out.W = std::sqrt(std::abs(g0)) * Matrix::Identity(A.D, A.D);
        out.W_pinv = out.W.inverse();
        out.rank_deficient = false;
        out.tensor.validate(1e-8);
        return out;
    }

    const auto f = spectral::psd_sqrt_and_inverse(G, 1e-12);
    out.W = f.W;
    out.W_pinv = f.W_pinv;
    out.rank_deficient = f.rank_deficient;

    out.tensor = QuantumTensor::zeros(A.d, static_cast<int>(f.rank));
    for (int x = 0; x < A.d; ++x)
        out.tensor[x] = f.W * A[x] * f.W_pinv / std::sqrt(mu);
    out.tensor.normalized = true;
    out.tensor.validate(1e-8);
    return out;
}

QuantumTensor mps_compress(const QuantumTensor &A, int D_new) {
    A.validate();
    if (!A.normalized)
        throw ArgumentError("mps_compress: input must be normalized");
    if (D_new < 1 || D_new > A.D)
        throw ArgumentError("mps_compress: need 1 <= D' <= D");

    const Matrix Pi = steady_state_quantum(A);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Pi);
    if (es.info() != Eigen::Success)
        throw ConvergenceError("mps_compress: eigensolver failed", Pi);

    // Descending eigenvalues; ties keep the solver's order.
    const Eigen::Index D = A.D;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(D));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return es.eigenvalues()(a) > es.eigenvalues()(b);
    });
    Matrix W(D, D);
    for (Eigen::Index k = 0; k < D; ++k) W.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)]);

    QuantumTensor B = QuantumTensor::zeros(A.d, D_new);
    for (int x = 0; x < A.d; ++x)
        B[x] = (W.adjoint() * A[x] * W).topLeftCorner(D_new, D_new);

    double mass = 0.0;
    for (const auto &m : B.K) mass += m.norm();
    if (!(mass > 0.0))
        throw CompressionError("mps_compress: truncated tensor vanishes");

    try {
        return mps_normalize(B).tensor;
    } catch (const DomainError &e) {
        throw CompressionError(std::string("mps_compress: truncated subspace carries no "
                                           "nonzero eigenvalue (") +
                               e.what() + ")");
    }
}

//=========================================================================
// Steady states and entropies
//=========================================================================

Matrix steady_state_quantum(const QuantumTensor &K) {
    K.validate();
    if (!K.normalized)
        throw ArgumentError("steady_state_quantum: tensor must be normalized");

    spectral::EigOptions opts;
    opts.tol = 1e-13;
    opts.hint = Matrix::Identity(K.D, K.D) / static_cast<double>(K.D);
    spectral::SpectralResult eig;
    try {
        eig = spectral::dominant_eigenpair(TransferMap::channel(K.K), opts);
    } catch (const ConvergenceError &e) {
        // A trace-preserving map that does not settle has peripheral spectrum.
        throw DegeneracyError(std::string("steady_state_quantum: no unique fixed point (") +
                              e.what() + ")");
    }
    if (std::abs(std::abs(eig.eigenvalue) - 1.0) > 1e-6)
        throw DomainError("steady_state_quantum: leading eigenvalue is not one");

    Matrix Pi = spectral::hermitize(eig.right_eigenoperator);
    const double tr = Pi.trace().real();
    if (std::abs(tr) < 1e-12)
        throw DegeneracyError("steady_state_quantum: traceless fixed point");
    Pi /= tr;

    // Validate the candidate: PSD and actually fixed.
    Eigen::SelfAdjointEigenSolver<Matrix> es(Pi, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -1e-8)
        throw DegeneracyError("steady_state_quantum: fixed-point candidate is not PSD");
    Matrix img = Matrix::Zero(K.D, K.D);
    for (const auto &m : K.K) img += m * Pi * m.adjoint();
    if ((img - Pi).norm() > 1e-8)
        throw DegeneracyError("steady_state_quantum: candidate is not a fixed point");
    Pi = 0.5 * (Pi + Pi.adjoint());
    for (Eigen::Index i = 0; i < Pi.rows(); ++i) Pi(i, i) = Complex(Pi(i, i).real(), 0.0);
    return Pi;
}

double memory_entropy(const QuantumTensor &K) {
    return spectral::von_neumann_entropy(steady_state_quantum(K));
}

double truncated_spectrum_entropy(const QuantumTensor &K, int keep) {
    if (keep < 1 || keep > K.D)
        throw ArgumentError("truncated_spectrum_entropy: need 1 <= keep <= D");
    const RealVector w = spectral::clipped_eigenvalues(steady_state_quantum(K)); // descending
    RealVector top = w.head(keep);
    const double mass = top.sum();
    if (!(mass > 0.0))
        throw DegeneracyError("truncated_spectrum_entropy: retained spectrum is empty");
    return spectral::shannon_entropy(top / mass);
}

Vector steady_coherent_state(const QuantumTensor &K) {
    const Matrix Pi = steady_state_quantum(K);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Pi);
    Vector phi = Vector::Zero(K.D);
    for (Eigen::Index i = 0; i < K.D; ++i) {
        const double lam = std::max(es.eigenvalues()(i), 0.0);
        phi += std::sqrt(lam) * es.eigenvectors().col(i);
    }
    phi.normalize();
    return phi;
}

//=========================================================================
// Output distribution
//=========================================================================

double sequence_probability_quantum(const QuantumTensor &K, const Vector &phi,
                                    const SymbolSequence &seq) {
    K.validate();
    check_symbols(seq, K.d);
    check_pure(phi, K.D, "sequence_probability_quantum");
    Vector v = phi;
    for (int x : seq.symbols) v = K[x] * v;
    return v.squaredNorm();
}

SymbolSequence sample_quantum(const QuantumTensor &K, const Vector &phi, long length,
                              std::uint64_t seed) {
    if (length < 0) throw ArgumentError("sample_quantum: negative length");
    K.validate();
    check_pure(phi, K.D, "sample_quantum");
    Rng rng(seed);
    SymbolSequence out;
    out.d = K.d;
    out.symbols.reserve(static_cast<std::size_t>(length));

    Vector v = phi;
    RealVector w(K.d);
    std::vector<Vector> branches(static_cast<std::size_t>(K.d));
    for (long t = 0; t < length; ++t) {
        for (int x = 0; x < K.d; ++x) {
            branches[static_cast<std::size_t>(x)] = K[x] * v;
            w(x) = branches[static_cast<std::size_t>(x)].squaredNorm();
        }
        if (!(w.sum() > 0.0))
            throw DomainError("sample_quantum: all branch probabilities vanished at step " +
                              std::to_string(t));
        const int x = rng.categorical(w);
        out.symbols.push_back(x);
        v = branches[static_cast<std::size_t>(x)] / std::sqrt(w(x));
    }
    return out;
}

RealVector enumerate_sequence_probabilities_quantum(const QuantumTensor &K, const Vector &phi,
                                                    int L) {
    if (L < 0) throw ArgumentError("enumerate_sequence_probabilities_quantum: negative length");
    double count = std::pow(static_cast<double>(K.d), L);
    if (count > 1e7)
        throw SizeError("enumerate_sequence_probabilities_quantum: d^L exceeds the guard");
    RealVector out(static_cast<Eigen::Index>(count));
    struct Frame {
        Vector v;
        int depth;
        std::size_t idx;
    };
    std::vector<Frame> stack;
    stack.push_back({phi, 0, 0});
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        if (f.depth == L) {
            out(static_cast<Eigen::Index>(f.idx)) = f.v.squaredNorm();
            continue;
        }
        for (int x = K.d - 1; x >= 0; --x)
            stack.push_back({K[x] * f.v, f.depth + 1, f.idx * K.d + static_cast<std::size_t>(x)});
    }
    return out;
}

//=========================================================================
// Accuracy measures
//=========================================================================

namespace {

TransferMap pairing_map(const QuantumTensor &A, const QuantumTensor &B) {
    if (A.d != B.d)
        throw ShapeError("pairing map: alphabet mismatch");
    return TransferMap(A.K, B.K, ConjugationMode::AdjointOnRight);
}

} // namespace

double fidelity(const QuantumTensor &A, const QuantumTensor &B, const Vector &sigma_a,
                const Vector &sigma_b, int L) {
    if (L < 0) throw ArgumentError("fidelity: negative length");
    check_pure(sigma_a, A.D, "fidelity");
    check_pure(sigma_b, B.D, "fidelity");
    const TransferMap map = pairing_map(A, B);
    Matrix Y = sigma_a * sigma_b.adjoint();
    for (int t = 0; t < L; ++t) Y = map.apply(Y);
    return spectral::trace_norm(Y);
}

double divergence_density(const QuantumTensor &A, const QuantumTensor &B) {
    const auto eig = spectral::dominant_eigenpair(pairing_map(A, B));
    return -std::log(std::abs(eig.eigenvalue));
}

Vector optimal_compressed_initial_state(const QuantumTensor &A, const QuantumTensor &B,
                                        const Vector &sigma_a) {
    check_pure(sigma_a, A.D, "optimal_compressed_initial_state");
    const auto eig = spectral::dominant_eigenpair(pairing_map(A, B).reversed());
    Vector v = eig.right_eigenoperator * sigma_a; // D_B x D_A times D_A
    const double n = v.norm();
    if (n <= 1e-12)
        throw DegeneracyError("optimal_compressed_initial_state: overlap functional "
                              "annihilates the reference state");
    return v / n;
}

double steady_fidelity(const QuantumTensor &A, const QuantumTensor &B, int L) {
    if (L < 0) throw ArgumentError("steady_fidelity: negative length");
    // Purification of Pi as a matrix P = W diag(sqrt(lambda)): column i holds
    // sqrt(lambda_i) |lambda_i>, the ancilla index being the column.
    const auto purify = [](const QuantumTensor &K) {
        const Matrix Pi = steady_state_quantum(K);
        Eigen::SelfAdjointEigenSolver<Matrix> es(Pi);
        Matrix P(K.D, K.D);
        for (Eigen::Index i = 0; i < K.D; ++i)
            P.col(i) = std::sqrt(std::max(es.eigenvalues()(i), 0.0)) * es.eigenvectors().col(i);
        return P;
    };
    const Matrix Pa = purify(A);
    const Matrix Pb = purify(B);

    // Column-stacked purifications as the initial dyad; the map acts on the
    // memory factor of each side and leaves the ancilla alone.
    const Eigen::Index da = A.D, db = B.D;
    Matrix Y = Matrix::Zero(da * da, db * db);
    {
        const Vector va = Eigen::Map<const Vector>(Pa.data(), da * da);
        const Vector vb = Eigen::Map<const Vector>(Pb.data(), db * db);
        Y = va * vb.adjoint();
    }
    for (int t = 0; t < L; ++t) {
        Matrix Z = Matrix::Zero(da * da, db * db);
        for (int x = 0; x < A.d; ++x) {
            Matrix tmp(da * da, db * db);
            for (Eigen::Index anc = 0; anc < da; ++anc)
                tmp.middleRows(anc * da, da) = A[x] * Y.middleRows(anc * da, da);
            for (Eigen::Index anc = 0; anc < db; ++anc)
                Z.middleCols(anc * db, db) += tmp.middleCols(anc * db, db) * B[x].adjoint();
        }
        Y = std::move(Z);
    }
    return spectral::trace_norm(Y);
}

AccuracyReport accuracy_report(const QuantumTensor &A, const QuantumTensor &B,
                               const Vector &sigma_a, const Vector &sigma_b,
                               const std::vector<int> &lengths,
                               std::optional<int> steady_length) {
    AccuracyReport rep;
    const auto eig = spectral::dominant_eigenpair(pairing_map(A, B));
    rep.divergence = -std::log(std::abs(eig.eigenvalue));
    rep.degenerate_spectrum = eig.degenerate;
    for (int L : lengths)
        rep.fidelity_at_length.emplace_back(L, fidelity(A, B, sigma_a, sigma_b, L));
    if (steady_length)
        rep.steady_fidelity_at_length = steady_fidelity(A, B, *steady_length);
    return rep;
}

//=========================================================================
// Equivalence checks
//=========================================================================

EquivalenceReport nonnormalized_equivalence_check(const QuantumTensor &A_raw,
                                                  const Vector &sigma, int max_length) {
    if (max_length < 0)
        throw ArgumentError("nonnormalized_equivalence_check: negative length");
    if (std::pow(static_cast<double>(A_raw.d), max_length) > 1e7)
        throw SizeError("nonnormalized_equivalence_check: d^L exceeds the guard");
    check_pure(sigma, A_raw.D, "nonnormalized_equivalence_check");

    const NormalizeResult nrm = mps_normalize(A_raw);
    if (nrm.rank_deficient)
        throw DomainError("nonnormalized_equivalence_check: gauge factor is singular");
    const double mu = nrm.mu;

    Vector sigma_b = nrm.W * sigma;
    const double wnorm = sigma_b.norm();
    if (!(wnorm > 0.0))
        throw DomainError("nonnormalized_equivalence_check: W annihilates the initial state");
    sigma_b /= wnorm;

    EquivalenceReport rep;
    rep.max_length = max_length;
    // Walk all strings of each length; the left operator contributes
    // mu^{-len/2} W / ||W sigma|| in front of the raw chain.
    struct Frame {
        Vector raw, nrm;
        int depth;
    };
    std::vector<Frame> stack;
    stack.push_back({sigma, sigma_b, 0});
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        const double pa =
            (nrm.W * f.raw).squaredNorm() / (std::pow(mu, f.depth) * wnorm * wnorm);
        const double pb = f.nrm.squaredNorm();
        rep.max_deviation = std::max(rep.max_deviation, std::abs(pa - pb));
        if (f.depth == max_length) continue;
        for (int x = 0; x < A_raw.d; ++x)
            stack.push_back({A_raw[x] * f.raw, nrm.tensor[x] * f.nrm, f.depth + 1});
    }
    return rep;
}

EquivalenceReport nonunifilar_probability_check(const hmm::TransitionTensor &T,
                                                int max_length) {
    if (max_length < 0)
        throw ArgumentError("nonunifilar_probability_check: negative length");
    if (std::pow(static_cast<double>(T.d), max_length) > 1e7)
        throw SizeError("nonunifilar_probability_check: d^L exceeds the guard");
    T.validate();

    const RealVector p0 = RealVector::Constant(T.D, 1.0 / T.D);
    EquivalenceReport rep;
    rep.max_length = max_length;

    // The ancilla-assisted channel acts diagonally: rho = diag(p) evolves to
    // diag(T^x p) with the string probability in the trace.
    struct Frame {
        RealVector p; // classical chain vector
        Matrix rho;   // density operator of the simulator
        int depth;
    };
    std::vector<Frame> stack;
    stack.push_back({p0, Matrix(p0.cast<Complex>().asDiagonal()), 0});
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        const double p_classical = f.p.sum();
        const double p_simulator = f.rho.trace().real();
        rep.max_deviation = std::max(rep.max_deviation, std::abs(p_classical - p_simulator));
        if (f.depth == max_length) continue;
        for (int x = 0; x < T.d; ++x) {
            Matrix next = Matrix::Zero(T.D, T.D);
            for (int b = 0; b < T.D; ++b) {
                const Complex occupancy = f.rho(b, b);
                for (int a = 0; a < T.D; ++a) next(a, a) += T[x](a, b) * occupancy;
            }
            stack.push_back({T[x] * f.p, std::move(next), f.depth + 1});
        }
    }
    return rep;
}

} // namespace stochsim::qsim
