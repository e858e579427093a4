#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stochsim/learning.hpp"
#include "stochsim/processes.hpp"

using namespace stochsim;
using namespace stochsim::learn;
using oracles::test_rng;
using processes::renewal_classical;
using processes::renewal_quantum;

namespace {

SymbolSequence random_symbols(int d, int L, std::mt19937_64 &rng) {
    SymbolSequence seq;
    seq.d = d;
    for (int t = 0; t < L; ++t)
        seq.symbols.push_back(static_cast<int>(oracles::unif(rng) * d) % d);
    return seq;
}

Vector first_basis(int D) {
    Vector v = Vector::Zero(D);
    v(0) = 1.0;
    return v;
}

} // namespace

TEST_CASE("log_likelihood of the uniform memoryless model") {
    qsim::QuantumTensor K = qsim::QuantumTensor::zeros(2, 1);
    K[0](0, 0) = 1.0 / std::sqrt(2.0);
    K[1](0, 0) = 1.0 / std::sqrt(2.0);
    K.normalized = true;
    auto &rng = test_rng();
    const auto seq = random_symbols(2, 100, rng);
    CHECK(log_likelihood(K, first_basis(1), seq) ==
          doctest::Approx(100.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("log_likelihood equals the direct product at short lengths") {
    auto &rng = test_rng();
    const auto K = oracles::random_kraus(2, 3, rng);
    const Vector phi = oracles::random_pure(3, rng);
    for (int L : {1, 5, 20}) {
        const auto seq = random_symbols(2, L, rng);
        const double direct = -std::log(qsim::sequence_probability_quantum(K, phi, seq));
        CHECK(log_likelihood(K, phi, seq) == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("log_likelihood survives sequences whose raw probability underflows") {
    const auto K = renewal_quantum(8);
    const auto seq = qsim::sample_quantum(K, qsim::steady_coherent_state(K), 10000, 3);
    const double cost = log_likelihood(K, qsim::steady_coherent_state(K), seq);
    CHECK(std::isfinite(cost));
    // the raw product would be e^{-cost}, far below double range
    CHECK(cost > 800.0);
}

TEST_CASE("log_likelihood reports the failing step index") {
    qsim::QuantumTensor K = qsim::QuantumTensor::zeros(2, 1);
    K[0](0, 0) = 1.0; // symbol 1 is impossible
    SymbolSequence seq{{0, 0, 1, 0}, 2};
    try {
        log_likelihood(K, first_basis(1), seq);
        CHECK(false);
    } catch (const ImpossibleSequenceError &e) {
        CHECK(e.index == 2);
    }
}

TEST_CASE("gradient matches central finite differences") {
    auto &rng = test_rng();
    for (int trial = 0; trial < 20; ++trial) {
        const int D = 2 + trial % 3;
        const int L = 10 + (trial * 7) % 41;
        const auto K = oracles::random_kraus(2, D, rng);
        const Vector phi = first_basis(D);
        const auto seq = random_symbols(2, L, rng);
        const auto G = gradient(K, phi, seq);

        const double h = 1e-6;
        double worst = 0.0;
        double scale = 1.0;
        for (int x = 0; x < 2; ++x)
            for (int i = 0; i < D; ++i)
                for (int j = 0; j < D; ++j) {
                    auto bump = [&](Complex delta) {
                        qsim::QuantumTensor Kb = K;
                        Kb.normalized = false;
                        Kb[x](i, j) += delta;
                        return log_likelihood(Kb, phi, seq);
                    };
                    const double d_re = (bump({h, 0}) - bump({-h, 0})) / (2 * h);
                    const double d_im = (bump({0, h}) - bump({0, -h})) / (2 * h);
                    const Complex g = G[static_cast<std::size_t>(x)](i, j);
                    worst = std::max({worst, std::abs(d_re - 2.0 * g.real()),
                                      std::abs(d_im - 2.0 * g.imag())});
                    scale = std::max({scale, std::abs(d_re), std::abs(d_im)});
                }
        CHECK(worst / scale < 1e-5);
    }
}

TEST_CASE("gradient closed form for a memoryless model") {
    qsim::QuantumTensor K = qsim::QuantumTensor::zeros(2, 1);
    const double p0 = 0.3;
    K[0](0, 0) = std::sqrt(p0);
    K[1](0, 0) = std::sqrt(1.0 - p0);
    K.normalized = true;
    SymbolSequence seq{{0, 1, 1, 0, 1, 0, 0, 0}, 2};
    const auto G = gradient(K, first_basis(1), seq);
    CHECK(G[0](0, 0).real() == doctest::Approx(-5.0 / std::sqrt(p0)).epsilon(1e-10));
    CHECK(G[1](0, 0).real() == doctest::Approx(-3.0 / std::sqrt(1.0 - p0)).epsilon(1e-10));
}

TEST_CASE("gradient is covariant under a global phase") {
    auto &rng = test_rng();
    const auto K = oracles::random_kraus(2, 3, rng);
    const auto seq = random_symbols(2, 30, rng);
    const Vector phi = first_basis(3);
    const auto G = gradient(K, phi, seq);

    const Complex phase = std::polar(1.0, 0.7);
    qsim::QuantumTensor Kp = K;
    for (auto &m : Kp.K) m *= phase;
    const auto Gp = gradient(Kp, phi, seq);
    for (int x = 0; x < 2; ++x)
        CHECK((Gp[static_cast<std::size_t>(x)] - phase * G[static_cast<std::size_t>(x)]).norm() <
              1e-9);
}

TEST_CASE("step_project at zero step leaves the cost unchanged") {
    auto &rng = test_rng();
    const auto K = oracles::random_kraus(2, 3, rng);
    const auto seq = random_symbols(2, 50, rng);
    const Vector phi = first_basis(3);
    const auto G = gradient(K, phi, seq);
    const auto moved = step_project(K, G, 0.0);
    CHECK(moved.kraus_defect() < 1e-9);
    CHECK(log_likelihood(moved, phi, seq) ==
          doctest::Approx(log_likelihood(K, phi, seq)).epsilon(1e-10));
}

TEST_CASE("step_project output always satisfies the Kraus identity") {
    auto &rng = test_rng();
    const auto K = oracles::random_kraus(2, 4, rng);
    const auto seq = random_symbols(2, 60, rng);
    const auto G = gradient(K, first_basis(4), seq);
    for (double eta : {1e-3, 1e-1, 1.0})
        CHECK(step_project(K, G, eta).kraus_defect() < 1e-9);
}

TEST_CASE("projected descent lowers the cost on a training sequence") {
    const auto T = renewal_classical(3);
    const auto s = hmm::summarize(T);
    const auto data = hmm::sample_classical(T, s.pi, 500, 17);
    auto &rng = test_rng();
    const auto K = oracles::random_kraus(2, 3, rng);
    const Vector phi = first_basis(3);
    const double before = log_likelihood(K, phi, data);
    const auto G = gradient(K, phi, data);
    bool improved = false;
    for (double eta = 0.1; eta > 1e-10; eta /= 2.0) {
        if (log_likelihood(step_project(K, G, eta), phi, data) < before) {
            improved = true;
            break;
        }
    }
    CHECK(improved);
}

TEST_CASE("step_stiefel preserves the stacked isometry exactly") {
    auto &rng = test_rng();
    const auto K = oracles::random_kraus(2, 4, rng);
    const auto seq = random_symbols(2, 40, rng);
    const auto G = gradient(K, first_basis(4), seq);
    for (double eta : {1e-3, 1e-1, 1.0}) {
        const auto moved = step_stiefel(K, G, eta);
        CHECK(moved.kraus_defect() < 1e-10);
    }
    const auto frozen = step_stiefel(K, G, 0.0);
    double diff = 0.0;
    for (int x = 0; x < 2; ++x) diff += (frozen[x] - K[x]).norm();
    CHECK(diff < 1e-12);
}

TEST_CASE("stiefel descent lowers the cost on a training sequence") {
    const auto T = renewal_classical(3);
    const auto s = hmm::summarize(T);
    const auto data = hmm::sample_classical(T, s.pi, 500, 23);
    auto &rng = test_rng();
    const auto K = oracles::random_kraus(2, 3, rng);
    const Vector phi = first_basis(3);
    const double before = log_likelihood(K, phi, data);
    const auto G = gradient(K, phi, data);
    bool improved = false;
    for (double eta = 0.1; eta > 1e-10; eta /= 2.0) {
        if (log_likelihood(step_stiefel(K, G, eta), phi, data) < before) {
            improved = true;
            break;
        }
    }
    CHECK(improved);
}

TEST_CASE("train_quantum learns a constant sequence exactly") {
    SymbolSequence seq;
    seq.d = 2;
    seq.symbols.assign(200, 0);
    TrainingConfig cfg;
    cfg.D = 1;
    cfg.restarts = 2;
    cfg.max_iters = 400;
    cfg.seed = 9;
    cfg.tol = 0.0;
    const auto trace = train_quantum(seq, cfg);
    CHECK(trace.costs.back() < 1e-3);
    CHECK(trace.final_tensor.kraus_defect() < 1e-8);
}

TEST_CASE("train_quantum is reproducible and monotone") {
    const auto T = renewal_classical(3);
    const auto s = hmm::summarize(T);
    const auto data = hmm::sample_classical(T, s.pi, 400, 41);
    TrainingConfig cfg;
    cfg.D = 3;
    cfg.restarts = 2;
    cfg.max_iters = 60;
    cfg.seed = 4;
    const auto a = train_quantum(data, cfg);
    const auto b = train_quantum(data, cfg);
    CHECK(a.costs == b.costs);
    CHECK(a.best_restart == b.best_restart);
    for (std::size_t i = 1; i < a.costs.size(); ++i) CHECK(a.costs[i] <= a.costs[i - 1]);
    CHECK(a.restart_final_cost.size() == 2);
}

TEST_CASE("evaluate_predictive fixed points") {
    const auto T = renewal_classical(4);
    SymbolSequence past{{0, 1, 0, 0}, 2};
    const RealVector p = evaluate_predictive(ClassicalModel{T, std::nullopt}, past, 6);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(bhattacharyya(p, p) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("evaluate_predictive matches the enumeration oracle") {
    const auto T = renewal_classical(4);
    SymbolSequence past{{0, 0, 1}, 2};
    const RealVector got = evaluate_predictive(ClassicalModel{T, std::nullopt}, past, 4);
    const RealVector cond = hmm::conditional_initial(T, past);
    int idx = 0;
    for (const auto &str : oracles::all_strings(2, 4)) {
        CHECK(got(idx) == doctest::Approx(oracles::classical_prob(T, cond, str)).epsilon(1e-12));
        ++idx;
    }
}

TEST_CASE("classical and quantum renewal simulators predict identically") {
    const auto T = renewal_classical(4);
    const auto K = renewal_quantum(4);
    SymbolSequence past{{1, 0, 0, 1, 0}, 2};
    const RealVector pc = evaluate_predictive(ClassicalModel{T, std::nullopt}, past, 6);
    const RealVector pq = evaluate_predictive(QuantumModel{K, std::nullopt}, past, 6);
    CHECK((pc - pq).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("evaluate_predictive rejects impossible pasts") {
    const auto T = renewal_classical(2);
    SymbolSequence past{{0, 0, 0}, 2};
    CHECK_THROWS_AS(evaluate_predictive(ClassicalModel{T, std::nullopt}, past, 3),
                    ImpossiblePastError);
}

TEST_CASE("compressed simulators keep the reference predictive accuracy split") {
    // Average Bhattacharyya of the half-memory compressed simulators of the
    // period-4 renewal process against the exact predictive distribution.
    const int n_past = 1000, past_len = 200, horizon = 10;
    const auto T = renewal_classical(4);
    const auto s = hmm::summarize(T);
    const auto Kq = renewal_quantum(4);
    const auto q2 = qsim::mps_compress(Kq, 2);
    const auto c2 = hmm::compress_entropy_preserving(T, 2).tensor;

    double acc_q = 0.0, acc_c = 0.0;
    for (int i = 0; i < n_past; ++i) {
        const auto past =
            hmm::sample_classical(T, s.pi, past_len, 5000 + static_cast<std::uint64_t>(i));
        const RealVector exact =
            evaluate_predictive(ClassicalModel{T, std::nullopt}, past, horizon);
        acc_q += bhattacharyya(exact,
                               evaluate_predictive(QuantumModel{q2, std::nullopt}, past, horizon));
        acc_c += bhattacharyya(
            exact, evaluate_predictive(ClassicalModel{c2, std::nullopt}, past, horizon));
    }
    acc_q /= n_past;
    acc_c /= n_past;
    CHECK(acc_q == doctest::Approx(0.842).epsilon(0.05 / 0.842));
    CHECK(acc_c == doctest::Approx(0.652).epsilon(0.05 / 0.652));
    CHECK(acc_q > acc_c);
}
