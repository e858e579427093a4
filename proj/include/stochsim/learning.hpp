#ifndef STOCHSIM_LEARNING_HPP
#define STOCHSIM_LEARNING_HPP

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "stochsim/classical.hpp"
#include "stochsim/quantum.hpp"

namespace stochsim::learn {

//=========================================================================
// Log-likelihood and its gradient
//=========================================================================

// -log P of the sequence, accumulated from per-step norms so that long
// sequences never touch the raw (exponentially small) probability.
double log_likelihood(const qsim::QuantumTensor &K, const Vector &phi,
                      const SymbolSequence &seq);

// Derivative of the cost with respect to the conjugated tensor entries,
// assembled from normalized forward/backward state sweeps. The descent
// direction is the negative of this.
std::vector<Matrix> gradient(const qsim::QuantumTensor &K, const Vector &phi,
                             const SymbolSequence &seq);

//=========================================================================
// Update rules
//=========================================================================

// Step against the gradient, then renormalize the tensor.
qsim::QuantumTensor step_project(const qsim::QuantumTensor &K,
                                 const std::vector<Matrix> &G, double eta);

// Cayley-retracted step on the manifold of stacked isometries; preserves
// the Kraus identity exactly.
qsim::QuantumTensor step_stiefel(const qsim::QuantumTensor &K,
                                 const std::vector<Matrix> &G, double eta);

//=========================================================================
// Training
//=========================================================================

enum class UpdateRule { ProjectNormalize, StiefelWenYin };

struct TrainingConfig {
    int D = 2;
    UpdateRule update_rule = UpdateRule::StiefelWenYin;
    double learning_rate = 1e-2; // initial step size for the line search
    int max_iters = 2000;
    double tol = -1.0; // |delta cost| stop; negative means 1e-7 * length
    int restarts = 1;
    std::uint64_t seed = 0;
};

struct TrainingTrace {
    std::vector<double> costs; // accepted-iterate cost values, best restart
    qsim::QuantumTensor final_tensor;
    int best_restart = 0;
    std::vector<double> restart_final_cost;
};

// Fits a normalized tensor by maximum likelihood from Haar-random isometric
// starts (one per restart, seed + r), with backtracking line search. The
// initial memory state is fixed to the first basis vector.
TrainingTrace train_quantum(const SymbolSequence &seq, const TrainingConfig &config);

//=========================================================================
// Predictive evaluation
//=========================================================================

struct ClassicalModel {
    hmm::TransitionTensor tensor;
    std::optional<RealVector> p0; // conditioning start; uniform when absent
};

struct QuantumModel {
    qsim::QuantumTensor tensor;
    std::optional<Vector> phi; // conditioning start; steady coherent state when absent
};

using PredictiveModel = std::variant<ClassicalModel, QuantumModel>;

// Exact distribution over all d^future_len continuations after conditioning
// the memory on `past` (chain filtering classically, normalized Kraus
// filtering quantumly).
RealVector evaluate_predictive(const PredictiveModel &model, const SymbolSequence &past,
                               int future_len);

double bhattacharyya(const RealVector &p, const RealVector &q);

} // namespace stochsim::learn

#endif
