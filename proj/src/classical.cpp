#include "stochsim/classical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "stochsim/rng.hpp"
#include "stochsim/spectral.hpp"

namespace stochsim::hmm {

namespace {

std::vector<Matrix> to_complex(const TransitionTensor &T) {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(T.d));
    for (int x = 0; x < T.d; ++x) out.push_back(T[x].cast<Complex>());
    return out;
}

void check_symbols(const SymbolSequence &seq, int d) {
    for (int s : seq.symbols)
        if (s < 0 || s >= d)
            throw DomainError("symbol out of range for alphabet size " + std::to_string(d));
}

} // namespace

TransitionTensor TransitionTensor::zeros(int d, int D) {
    if (d < 1 || D < 1) throw ArgumentError("transition tensor: d and D must be positive");
    TransitionTensor t;
    t.d = d;
    t.D = D;
    t.T.assign(static_cast<std::size_t>(d), RealMatrix::Zero(D, D));
    return t;
}

void TransitionTensor::validate(double tol) const {
    if (d < 1 || D < 1 || static_cast<int>(T.size()) != d)
        throw ShapeError("transition tensor: inconsistent sizes");
    RealVector colsum = RealVector::Zero(D);
    for (const auto &m : T) {
        if (m.rows() != D || m.cols() != D)
            throw ShapeError("transition tensor: matrix shape mismatch");
        if (m.minCoeff() < -tol)
            throw DomainError("transition tensor: negative entry");
        colsum += m.colwise().sum().transpose();
    }
    for (int b = 0; b < D; ++b)
        if (std::abs(colsum(b) - 1.0) > tol)
            throw DomainError("transition tensor: column " + std::to_string(b) +
                              " sums to " + std::to_string(colsum(b)));
}

RealMatrix TransitionTensor::transition_matrix() const {
    RealMatrix J = RealMatrix::Zero(D, D);
    for (const auto &m : T) J += m;
    return J;
}

RealMatrix TransitionTensor::emission_matrix() const {
    RealMatrix E = RealMatrix::Zero(d, D);
    for (int x = 0; x < d; ++x) E.row(x) = T[static_cast<std::size_t>(x)].colwise().sum();
    return E;
}

TransitionTensor factorized_tensor(const RealMatrix &J, const RealMatrix &E) {
    if (J.rows() != J.cols() || E.cols() != J.cols())
        throw ShapeError("factorized_tensor: J must be square and share columns with E");
    TransitionTensor t = TransitionTensor::zeros(static_cast<int>(E.rows()),
                                                 static_cast<int>(J.rows()));
    for (int x = 0; x < t.d; ++x) t[x] = J * E.row(x).asDiagonal();
    return t;
}

//=========================================================================
// Summary / steady state
//=========================================================================

ClassicalSummary summarize(const TransitionTensor &T, double unifilar_tol) {
    T.validate();
    ClassicalSummary s;
    s.J = T.transition_matrix();
    s.E = T.emission_matrix();

    Eigen::EigenSolver<RealMatrix> es(s.J);
    if (es.info() != Eigen::Success)
        throw ConvergenceError("summarize: eigensolver failed", s.J.cast<Complex>());
    const Vector evals = es.eigenvalues();
    Eigen::Index top = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        if (std::abs(evals(i)) > best) {
            best = std::abs(evals(i));
            top = i;
        }
    }
    for (Eigen::Index i = 0; i < evals.size(); ++i)
        if (i != top && best - std::abs(evals(i)) < 1e-9)
            throw DegeneracyError("summarize: steady state is not unique");

    Vector v = es.eigenvectors().col(top);
    v *= std::polar(1.0, -std::arg(v.sum()));
    RealVector pi = v.real();
    double sum = pi.sum();
    if (std::abs(sum) < 1e-12)
        throw DegeneracyError("summarize: steady eigenvector has zero mass");
    pi /= sum;
    for (Eigen::Index i = 0; i < pi.size(); ++i) pi(i) = std::max(pi(i), 0.0);
    pi /= pi.sum();
    s.pi = pi;

    s.unifilar = true;
    for (int x = 0; x < T.d && s.unifilar; ++x)
        for (int b = 0; b < T.D && s.unifilar; ++b) {
            int hits = 0;
            for (int a = 0; a < T.D; ++a)
                if (T[x](a, b) > unifilar_tol) ++hits;
            if (hits > 1) s.unifilar = false;
        }
    return s;
}

//=========================================================================
// Probabilities and conditioning
//=========================================================================

double sequence_probability(const TransitionTensor &T, const RealVector &p_init,
                            const SymbolSequence &seq) {
    if (p_init.size() != T.D)
        throw ShapeError("sequence_probability: initial distribution has wrong length");
    check_symbols(seq, T.d);
    RealVector v = p_init;
    for (int x : seq.symbols) v = T[x] * v;
    return v.sum();
}

RealVector conditional_initial(const TransitionTensor &T, const SymbolSequence &past,
                               const std::optional<RealVector> &p0) {
    check_symbols(past, T.d);
    RealVector v = p0 ? *p0 : RealVector::Constant(T.D, 1.0 / T.D);
    if (v.size() != T.D)
        throw ShapeError("conditional_initial: p0 has wrong length");
    for (int x : past.symbols) {
        v = T[x] * v;
        const double s = v.sum();
        if (!(s > 0.0))
            throw ImpossiblePastError("conditional_initial: past has probability zero");
        v /= s;
    }
    return v;
}

SymbolSequence sample_classical(const TransitionTensor &T, const RealVector &p_init,
                                long length, std::uint64_t seed) {
    if (length < 0) throw ArgumentError("sample_classical: negative length");
    if (p_init.size() != T.D)
        throw ShapeError("sample_classical: initial distribution has wrong length");
    Rng rng(seed);
    SymbolSequence out;
    out.d = T.d;
    out.symbols.reserve(static_cast<std::size_t>(length));

    int state = rng.categorical(p_init);
    RealVector joint(T.d * T.D); // (x, alpha) flattened with x major
    for (long t = 0; t < length; ++t) {
        for (int x = 0; x < T.d; ++x) joint.segment(x * T.D, T.D) = T[x].col(state);
        const int k = rng.categorical(joint);
        out.symbols.push_back(k / T.D);
        state = k % T.D;
    }
    return out;
}

RealVector enumerate_sequence_probabilities(const TransitionTensor &T, const RealVector &p,
                                            int L) {
    if (L < 0) throw ArgumentError("enumerate_sequence_probabilities: negative length");
    double count = std::pow(static_cast<double>(T.d), L);
    if (count > 1e7)
        throw SizeError("enumerate_sequence_probabilities: d^L exceeds the enumeration guard");
    RealVector out(static_cast<Eigen::Index>(count));
    // Depth-first over prefixes; leaf index is the base-d string value.
    struct Frame {
        RealVector v;
        int depth;
        std::size_t idx;
    };
    std::vector<Frame> stack;
    stack.push_back({p, 0, 0});
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        if (f.depth == L) {
            out(static_cast<Eigen::Index>(f.idx)) = f.v.sum();
            continue;
        }
        for (int x = T.d - 1; x >= 0; --x)
            stack.push_back({T[x] * f.v, f.depth + 1, f.idx * T.d + static_cast<std::size_t>(x)});
    }
    return out;
}

//=========================================================================
// Compression
//=========================================================================

EntropyCompression compress_entropy_preserving(const TransitionTensor &T, int D_new) {
    if (D_new < 1 || D_new > T.D)
        throw ArgumentError("compress_entropy_preserving: need 1 <= D' <= D");
    const ClassicalSummary s = summarize(T);

    std::vector<int> order(static_cast<std::size_t>(T.D));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return s.pi(a) > s.pi(b); });

    RealVector pis(T.D);
    for (int i = 0; i < T.D; ++i) pis(i) = s.pi(order[static_cast<std::size_t>(i)]);

    const double lambda = pis.head(D_new).sum();
    if (!(lambda > 0.0))
        throw DegeneracyError("compress_entropy_preserving: retained steady mass is zero");
    RealVector pi_new = pis.head(D_new) / lambda;

    // Decode R (D x D') and Bayes-rule encode C (D' x D).
    RealMatrix R = RealMatrix::Zero(T.D, D_new);
    for (int a = 0; a < D_new; ++a) R(a, a) = lambda;
    for (int a = D_new; a < T.D; ++a) R.row(a).setConstant(pis(a));
    RealMatrix C = RealMatrix::Zero(D_new, T.D);
    for (int ap = 0; ap < D_new; ++ap)
        for (int a = 0; a < T.D; ++a)
            if (pis(a) > 0.0) C(ap, a) = R(a, ap) * pi_new(ap) / pis(a);

    EntropyCompression out;
    out.permutation = order;
    out.compressed_steady = pi_new;
    out.tensor = TransitionTensor::zeros(T.d, D_new);
    for (int x = 0; x < T.d; ++x) {
        RealMatrix Ts(T.D, T.D);
        for (int a = 0; a < T.D; ++a)
            for (int b = 0; b < T.D; ++b)
                Ts(a, b) = T[x](order[static_cast<std::size_t>(a)],
                                order[static_cast<std::size_t>(b)]);
        out.tensor[x] = C * Ts * R;
    }
    out.tensor.validate(1e-9);
    return out;
}

TransitionTensor compress_spectral(const TransitionTensor &T, int D_new) {
    if (D_new < 1 || D_new > T.D)
        throw ArgumentError("compress_spectral: need 1 <= D' <= D");
    const ClassicalSummary s = summarize(T);
    const RealMatrix F = s.J * s.pi.asDiagonal();

    Eigen::BDCSVD<RealMatrix> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RealMatrix U = svd.matrixU();
    const RealMatrix Q = svd.singularValues().asDiagonal() * svd.matrixV().transpose();

    TransitionTensor out = TransitionTensor::zeros(T.d, D_new);
    for (int x = 0; x < T.d; ++x) {
        const RealMatrix B =
            Q.topRows(D_new) * s.E.row(x).asDiagonal() * U.leftCols(D_new);
        out[x] = B.cwiseMax(0.0);
    }
    for (int b = 0; b < D_new; ++b) {
        double norm = 0.0;
        for (int x = 0; x < T.d; ++x) norm += out[x].col(b).sum();
        if (norm > 0.0) {
            for (int x = 0; x < T.d; ++x) out[x].col(b) /= norm;
        } else {
            for (int x = 0; x < T.d; ++x) out[x].col(b).setConstant(1.0 / (T.d * D_new));
        }
    }
    out.validate(1e-9);
    return out;
}

//=========================================================================
// Baum-Welch
//=========================================================================

BaumWelchResult baum_welch(const SymbolSequence &seq, int D,
                           const std::optional<std::pair<RealMatrix, RealMatrix>> &init,
                           const BaumWelchConfig &config) {
    if (seq.empty()) throw ArgumentError("baum_welch: empty training sequence");
    if (D < 1) throw ArgumentError("baum_welch: memory size must be positive");
    const int d = seq.d;
    check_symbols(seq, d);
    const std::size_t L = seq.size();

    BaumWelchResult res;
    if (init) {
        res.J = init->first;
        res.E = init->second;
        if (res.J.rows() != D || res.J.cols() != D || res.E.rows() != d || res.E.cols() != D)
            throw ShapeError("baum_welch: init matrices have wrong shape");
    } else {
        Rng rng(config.seed);
        res.J.resize(D, D);
        res.E.resize(d, D);
        for (int b = 0; b < D; ++b) {
            for (int a = 0; a < D; ++a) res.J(a, b) = rng.uniform();
            for (int x = 0; x < d; ++x) res.E(x, b) = rng.uniform();
            res.J.col(b) /= res.J.col(b).sum();
            res.E.col(b) /= res.E.col(b).sum();
        }
    }
    RealVector p = RealVector::Constant(D, 1.0 / D);

    RealMatrix alpha(D, L), beta(D, L);
    RealVector scale(L);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int it = 0; it < config.max_iters; ++it) {
        // Scaled forward pass; the state at slot t emits symbol[t].
        RealVector v = p.cwiseProduct(res.E.row(seq.symbols[0]).transpose());
        scale(0) = v.sum();
        if (!(scale(0) > 0.0))
            throw ImpossibleSequenceError("baum_welch: zero-probability prefix", 0);
        alpha.col(0) = v / scale(0);
        for (std::size_t t = 1; t < L; ++t) {
            v = (res.J * alpha.col(t - 1)).cwiseProduct(res.E.row(seq.symbols[t]).transpose());
            scale(t) = v.sum();
            if (!(scale(t) > 0.0))
                throw ImpossibleSequenceError("baum_welch: zero-probability step", t);
            alpha.col(t) = v / scale(t);
        }
        double ll = 0.0;
        for (std::size_t t = 0; t < L; ++t) ll += std::log(scale(t));
        res.log_likelihood.push_back(ll);

        beta.col(L - 1).setOnes();
        for (std::size_t t = L - 1; t > 0; --t)
            beta.col(t - 1) = res.J.transpose() *
                              (res.E.row(seq.symbols[t]).transpose().cwiseProduct(beta.col(t))) /
                              scale(t);

        RealMatrix gamma = alpha.cwiseProduct(beta);
        for (std::size_t t = 0; t < L; ++t) gamma.col(t) /= gamma.col(t).sum();

        RealMatrix Jn = RealMatrix::Zero(D, D);
        for (std::size_t t = 0; t + 1 < L; ++t) {
            const RealVector right =
                res.E.row(seq.symbols[t + 1]).transpose().cwiseProduct(beta.col(t + 1)) / scale(t + 1);
            Jn += right * alpha.col(t).transpose();
        }
        // xi_t(a,b) carries the current J(a,b) as a factor.
        Jn = res.J.cwiseProduct(Jn);

        RealMatrix En = RealMatrix::Zero(d, D);
        for (std::size_t t = 0; t < L; ++t) En.row(seq.symbols[t]) += gamma.col(t).transpose();

        RealVector occ_trans = gamma.leftCols(L - 1).rowwise().sum();
        RealVector occ_all = gamma.rowwise().sum();
        for (int b = 0; b < D; ++b) {
            if (occ_trans(b) > 0.0) {
                res.J.col(b) = Jn.col(b) / occ_trans(b);
            } else {
                res.J.col(b).setConstant(1.0 / D);
                res.reseeded = true;
            }
            if (occ_all(b) > 0.0) {
                res.E.col(b) = En.col(b) / occ_all(b);
            } else {
                res.E.col(b).setConstant(1.0 / d);
                res.reseeded = true;
            }
        }
        p = gamma.col(0);

        if (std::abs(ll - prev_ll) < config.tol) break;
        prev_ll = ll;
    }
    return res;
}

//=========================================================================
// Accuracy measures
//=========================================================================

double bhattacharyya_exhaustive(const TransitionTensor &T, const TransitionTensor &Tbar,
                                const RealVector &p, const RealVector &pbar, int L) {
    if (T.d != Tbar.d)
        throw ShapeError("bhattacharyya_exhaustive: alphabet mismatch");
    const RealVector P = enumerate_sequence_probabilities(T, p, L);
    const RealVector Pb = enumerate_sequence_probabilities(Tbar, pbar, L);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < P.size(); ++i)
        acc += std::sqrt(std::max(P(i), 0.0) * std::max(Pb(i), 0.0));
    return acc;
}

SimilarityRate similarity_decay_rate(const TransitionTensor &T, const TransitionTensor &Tbar) {
    if (T.d != Tbar.d)
        throw ShapeError("similarity_decay_rate: alphabet mismatch");
    using spectral::ConjugationMode;
    using spectral::TransferMap;
    const auto Tc = to_complex(T);
    const auto Tbc = to_complex(Tbar);

    const auto modulus = [](const TransferMap &m) {
        return std::abs(spectral::dominant_eigenpair(m).eigenvalue);
    };
    SimilarityRate out;
    out.cross_modulus = modulus(TransferMap(Tc, Tbc, ConjugationMode::TransposeOnRight));
    out.self_modulus_a = modulus(TransferMap(Tc, Tc, ConjugationMode::TransposeOnRight));
    out.self_modulus_b = modulus(TransferMap(Tbc, Tbc, ConjugationMode::TransposeOnRight));
    out.rate = -std::log(out.cross_modulus /
                         std::sqrt(out.self_modulus_a * out.self_modulus_b));
    return out;
}

} // namespace stochsim::hmm
