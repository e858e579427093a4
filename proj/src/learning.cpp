#include "stochsim/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/QR>

#include "stochsim/rng.hpp"

namespace stochsim::learn {

namespace {

void check_inputs(const qsim::QuantumTensor &K, const Vector &phi, const SymbolSequence &seq) {
    if (seq.empty()) throw ArgumentError("training sequence is empty");
    if (seq.d != K.d) throw ShapeError("alphabet size mismatch between tensor and sequence");
    for (int s : seq.symbols)
        if (s < 0 || s >= K.d) throw DomainError("symbol out of range");
    if (phi.size() != K.D) throw ShapeError("initial memory state has wrong dimension");
}

Matrix stack(const std::vector<Matrix> &blocks, int d, int D) {
    Matrix out(static_cast<Eigen::Index>(d) * D, D);
    for (int x = 0; x < d; ++x) out.middleRows(static_cast<Eigen::Index>(x) * D, D) = blocks[static_cast<std::size_t>(x)];
    return out;
}

std::vector<Matrix> unstack(const Matrix &m, int d, int D) {
    std::vector<Matrix> out(static_cast<std::size_t>(d));
    for (int x = 0; x < d; ++x) out[static_cast<std::size_t>(x)] = m.middleRows(static_cast<Eigen::Index>(x) * D, D);
    return out;
}

Vector basis_state(int D) {
    Vector phi = Vector::Zero(D);
    phi(0) = 1.0;
    return phi;
}

// Haar isometry via QR of a Gaussian matrix with the R phases absorbed.
Matrix haar_isometry(int rows, int cols, Rng &rng) {
    Matrix M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = rng.normal_complex();
    Eigen::HouseholderQR<Matrix> qr(M);
    Matrix Q = qr.householderQ() * Matrix::Identity(rows, cols);
    const Matrix R = qr.matrixQR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < cols; ++j) {
        const Complex r = R(j, j);
        if (std::abs(r) > 0.0) Q.col(j) *= r / std::abs(r);
    }
    return Q;
}

} // namespace

//=========================================================================
// Cost and gradient
//=========================================================================

double log_likelihood(const qsim::QuantumTensor &K, const Vector &phi,
                      const SymbolSequence &seq) {
    check_inputs(K, phi, seq);
    Vector v = phi;
    double cost = 0.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        v = K[seq.symbols[t]] * v;
        const double n = v.norm();
        if (!(n > 0.0))
            throw ImpossibleSequenceError("log_likelihood: zero-probability step", t);
        cost -= 2.0 * std::log(n);
        v /= n;
    }
    return cost;
}

std::vector<Matrix> gradient(const qsim::QuantumTensor &K, const Vector &phi,
                             const SymbolSequence &seq) {
    check_inputs(K, phi, seq);
    const std::size_t L = seq.size();
    const int D = K.D;

    // Forward states F_t (before symbol t), normalized each step.
    std::vector<Vector> F(L + 1);
    F[0] = phi;
    for (std::size_t t = 0; t < L; ++t) {
        Vector v = K[seq.symbols[t]] * F[t];
        const double n = v.norm();
        if (!(n > 0.0))
            throw ImpossibleSequenceError("gradient: zero-probability step", t);
        F[t + 1] = v / n;
    }

    // Backward sweep seeded at the end of the sequence with the final forward
    // state; per-step normalization cancels inside each gradient term.
    std::vector<Matrix> G(static_cast<std::size_t>(K.d), Matrix::Zero(D, D));
    Vector b = F[L];
    for (std::size_t t = L; t-- > 0;) {
        const int x = seq.symbols[t];
        const Complex den = (K[x] * F[t]).dot(b); // <K F_t, B_t>
        if (std::abs(den) <= 0.0)
            throw ImpossibleSequenceError("gradient: singular overlap", t);
        G[static_cast<std::size_t>(x)].noalias() -= (b * F[t].adjoint()) / den;
        if (t > 0) {
            Vector w = K[x].adjoint() * b;
            const double n = w.norm();
            if (!(n > 0.0))
                throw ImpossibleSequenceError("gradient: backward state vanished", t);
            b = w / n;
        }
    }
    return G;
}

//=========================================================================
// Update rules
//=========================================================================

qsim::QuantumTensor step_project(const qsim::QuantumTensor &K,
                                 const std::vector<Matrix> &G, double eta) {
    if (eta < 0.0) throw ArgumentError("step_project: negative step size");
    qsim::QuantumTensor moved = K;
    for (int x = 0; x < K.d; ++x) moved[x] -= eta * G[static_cast<std::size_t>(x)];
    moved.normalized = false;
    return qsim::mps_normalize(moved).tensor;
}

qsim::QuantumTensor step_stiefel(const qsim::QuantumTensor &K,
                                 const std::vector<Matrix> &G, double eta) {
    const Matrix Km = stack(K.K, K.d, K.D);
    if ((Km.adjoint() * Km - Matrix::Identity(K.D, K.D)).norm() > 1e-8)
        throw DomainError("step_stiefel: stacked tensor is not an isometry");
    const Matrix Gm = stack(G, K.d, K.D);
    // Skew generator of the descent curve; the Cayley transform of a skew
    // matrix is unitary, so the stacked isometry property is exact.
    const Matrix A = Gm * Km.adjoint() - Km * Gm.adjoint();
    const Eigen::Index n = A.rows();

    double step = eta;
    for (int attempt = 0; attempt < 30; ++attempt) {
        const Matrix lhs = Matrix::Identity(n, n) + step * A;
        Eigen::PartialPivLU<Matrix> lu(lhs);
        const Matrix moved = lu.solve((Matrix::Identity(n, n) - step * A) * Km);
        if ((lhs * moved - (Matrix::Identity(n, n) - step * A) * Km).norm() <
            1e-8 * std::max(1.0, Km.norm())) {
            qsim::QuantumTensor out = K;
            out.K = unstack(moved, K.d, K.D);
            out.normalized = true;
            return out;
        }
        step /= 2.0;
    }
    throw ConvergenceError("step_stiefel: Cayley solve failed at every step size", Km);
}

//=========================================================================
// Training
//=========================================================================

namespace {

struct RestartOutcome {
    std::vector<double> costs;
    qsim::QuantumTensor tensor;
    bool ok = false;
    std::string diagnostic;
};

RestartOutcome run_restart(const SymbolSequence &seq, const TrainingConfig &cfg,
                           std::uint64_t restart_seed) {
    RestartOutcome out;
    Rng rng(restart_seed);

    qsim::QuantumTensor K = qsim::QuantumTensor::zeros(seq.d, cfg.D);
    K.K = unstack(haar_isometry(seq.d * cfg.D, cfg.D, rng), seq.d, cfg.D);
    K.normalized = true;
    const Vector phi = basis_state(cfg.D);
    const double tol = cfg.tol >= 0.0 ? cfg.tol : 1e-7 * static_cast<double>(seq.size());

    try {
        double cost = log_likelihood(K, phi, seq);
        out.costs.push_back(cost);
        double eta = cfg.learning_rate;
        int stall = 0;
        for (int it = 0; it < cfg.max_iters; ++it) {
            const std::vector<Matrix> G = gradient(K, phi, seq);
            bool accepted = false;
            qsim::QuantumTensor candidate;
            double cand_cost = cost;
            for (int halving = 0; halving < 30; ++halving) {
                candidate = cfg.update_rule == UpdateRule::StiefelWenYin
                                ? step_stiefel(K, G, eta)
                                : step_project(K, G, eta);
                cand_cost = log_likelihood(candidate, phi, seq);
                if (cand_cost < cost) {
                    accepted = true;
                    break;
                }
                eta /= 2.0;
            }
            if (!accepted) break;
            const double drop = cost - cand_cost;
            K = std::move(candidate);
            cost = cand_cost;
            out.costs.push_back(cost);
            eta = std::min(eta * 1.5, 1.0);
            // Require the improvement to stay below tol for a few
            // consecutive iterations before declaring convergence.
            stall = drop < tol ? stall + 1 : 0;
            if (stall >= 5) break;
        }
        out.tensor = std::move(K);
        out.ok = true;
    } catch (const Error &e) {
        out.diagnostic = e.what();
    }
    return out;
}

} // namespace

TrainingTrace train_quantum(const SymbolSequence &seq, const TrainingConfig &cfg) {
    if (seq.empty()) throw ArgumentError("train_quantum: empty training sequence");
    if (cfg.D < 1) throw ArgumentError("train_quantum: memory size must be positive");
    if (cfg.restarts < 1) throw ArgumentError("train_quantum: need at least one restart");
    if (!(cfg.learning_rate > 0.0))
        throw ArgumentError("train_quantum: learning rate must be positive");

    TrainingTrace trace;
    trace.restart_final_cost.assign(static_cast<std::size_t>(cfg.restarts),
                                    std::numeric_limits<double>::quiet_NaN());
    std::optional<RestartOutcome> best;
    std::ostringstream failures;
    for (int r = 0; r < cfg.restarts; ++r) {
        RestartOutcome o = run_restart(seq, cfg, cfg.seed + static_cast<std::uint64_t>(r));
        if (!o.ok) {
            failures << "restart " << r << ": " << o.diagnostic << "; ";
            continue;
        }
        trace.restart_final_cost[static_cast<std::size_t>(r)] = o.costs.back();
        if (!best || o.costs.back() < best->costs.back()) {
            best = std::move(o);
            trace.best_restart = r;
        }
    }
    if (!best)
        throw TrainingError("train_quantum: every restart failed: " + failures.str());
    trace.costs = std::move(best->costs);
    trace.final_tensor = std::move(best->tensor);
    return trace;
}

//=========================================================================
// Predictive evaluation
//=========================================================================

RealVector evaluate_predictive(const PredictiveModel &model, const SymbolSequence &past,
                               int future_len) {
    if (future_len < 0) throw ArgumentError("evaluate_predictive: negative horizon");
    if (std::holds_alternative<ClassicalModel>(model)) {
        const auto &m = std::get<ClassicalModel>(model);
        const RealVector v = hmm::conditional_initial(m.tensor, past, m.p0);
        return hmm::enumerate_sequence_probabilities(m.tensor, v, future_len);
    }
    const auto &m = std::get<QuantumModel>(model);
    Vector v = m.phi ? *m.phi : qsim::steady_coherent_state(m.tensor);
    if (v.size() != m.tensor.D)
        throw ShapeError("evaluate_predictive: initial state has wrong dimension");
    for (int s : past.symbols) {
        if (s < 0 || s >= m.tensor.d) throw DomainError("evaluate_predictive: symbol range");
        v = m.tensor[s] * v;
        const double n = v.norm();
        if (!(n > 0.0))
            throw ImpossiblePastError("evaluate_predictive: past has probability zero");
        v /= n;
    }
    return qsim::enumerate_sequence_probabilities_quantum(m.tensor, v, future_len);
}

double bhattacharyya(const RealVector &p, const RealVector &q) {
    if (p.size() != q.size())
        throw ShapeError("bhattacharyya: distribution length mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        acc += std::sqrt(std::max(p(i), 0.0) * std::max(q(i), 0.0));
    return acc;
}

} // namespace stochsim::learn
