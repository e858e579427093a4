#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stochsim/classical.hpp"
#include "stochsim/processes.hpp"
#include "stochsim/spectral.hpp"

using namespace stochsim;
using namespace stochsim::hmm;
using oracles::test_rng;
using processes::renewal_classical;

TEST_CASE("summarize the period-2 renewal chain") {
    const auto T = renewal_classical(2);
    const auto s = summarize(T);
    RealMatrix J(2, 2);
    J << 0.5, 1.0, 0.5, 0.0;
    CHECK((s.J - J).norm() < 1e-12);
    CHECK(s.pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
    CHECK(s.pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(s.unifilar);
}

TEST_CASE("summarize a trivial single-symbol chain") {
    RealMatrix J(3, 3);
    J << 0.2, 0.5, 0.3, 0.5, 0.2, 0.3, 0.3, 0.3, 0.4;
    TransitionTensor T = TransitionTensor::zeros(1, 3);
    T[0] = J;
    const auto s = summarize(T);
    CHECK((s.E - RealMatrix::Ones(1, 3)).norm() < 1e-12);
    CHECK((s.J * s.pi - s.pi).norm() < 1e-10);
}

TEST_CASE("summarize renewal N=32: unifilar with strictly decreasing steady state") {
    const int N = 32;
    const auto s = summarize(renewal_classical(N));
    CHECK(s.unifilar);
    for (int k = 0; k + 1 < N; ++k) CHECK(s.pi(k) > s.pi(k + 1));
    // pi_k proportional to N+1-k.
    for (int k = 0; k < N; ++k)
        CHECK(s.pi(k) == doctest::Approx(2.0 * (N - k) / (N * (N + 1.0))).epsilon(1e-9));
}

TEST_CASE("summarize rejects a non-unique steady state") {
    // Two disconnected absorbing states.
    TransitionTensor T = TransitionTensor::zeros(1, 2);
    T[0] = RealMatrix::Identity(2, 2);
    CHECK_THROWS_AS(summarize(T), DegeneracyError);
}

TEST_CASE("sequence_probability basics") {
    const auto T = renewal_classical(2);
    const auto s = summarize(T);
    CHECK(sequence_probability(T, s.pi, {{}, 2}) == doctest::Approx(1.0));
    CHECK(sequence_probability(T, s.pi, {{1}, 2}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    SymbolSequence bad{{2}, 2};
    CHECK_THROWS_AS(sequence_probability(T, s.pi, bad), DomainError);
}

TEST_CASE("sequence probabilities sum to one over all strings") {
    auto &rng = test_rng();
    for (int trial = 0; trial < 3; ++trial) {
        const auto T = oracles::random_tensor(2, 3, rng);
        const auto s = summarize(T);
        double total = 0.0;
        for (const auto &str : oracles::all_strings(2, 4))
            total += sequence_probability(T, s.pi, oracles::to_sequence(str, 2));
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        // and the enumeration helper agrees with the explicit sum
        const RealVector probs = enumerate_sequence_probabilities(T, s.pi, 4);
        CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("conditional_initial base cases") {
    const auto T = renewal_classical(4);
    const RealVector u = conditional_initial(T, {{}, 2});
    CHECK((u - RealVector::Constant(4, 0.25)).norm() < 1e-12);

    // A past ending in a tick pins the memory to the reset state.
    const RealVector v = conditional_initial(T, {{0, 0, 1}, 2});
    CHECK(v(0) == doctest::Approx(1.0));
    CHECK(v.tail(3).norm() < 1e-12);
}

TEST_CASE("conditional_initial rejects impossible pasts") {
    const auto T = renewal_classical(2);
    // Three zeros in a row cannot happen for period 2.
    SymbolSequence past{{0, 0, 0}, 2};
    CHECK_THROWS_AS(conditional_initial(T, past), ImpossiblePastError);
}

TEST_CASE("conditional_initial averages to the steady state over long pasts") {
    const auto T = renewal_classical(4);
    const auto s = summarize(T);
    const int n_past = 1000, len = 60;
    RealMatrix samples(4, n_past);
    for (int i = 0; i < n_past; ++i) {
        const auto past = sample_classical(T, s.pi, len, 9000 + static_cast<std::uint64_t>(i));
        samples.col(i) = conditional_initial(T, past);
    }
    const RealVector mean = samples.rowwise().mean();
    for (int k = 0; k < 4; ++k) {
        const double sd =
            std::sqrt((samples.row(k).array() - mean(k)).square().sum() / (n_past - 1.0));
        CHECK(std::abs(mean(k) - s.pi(k)) <
              3.0 * sd / std::sqrt(static_cast<double>(n_past)) + 1e-12);
    }
}

TEST_CASE("sample_classical basics") {
    const auto T = renewal_classical(2);
    const auto s = summarize(T);
    CHECK(sample_classical(T, s.pi, 0, 1).symbols.empty());

    // Deterministic cycle: state k emits k and moves on.
    TransitionTensor cyc = TransitionTensor::zeros(2, 2);
    cyc[0](1, 0) = 1.0;
    cyc[1](0, 1) = 1.0;
    RealVector start(2);
    start << 1.0, 0.0;
    const auto orbit = sample_classical(cyc, start, 6, 7);
    CHECK(orbit.symbols == std::vector<int>{0, 1, 0, 1, 0, 1});
}

TEST_CASE("sample_classical reproduces the uniform gap law") {
    const auto T = renewal_classical(2);
    const auto s = summarize(T);
    const long n = 1000000;
    const auto seq = sample_classical(T, s.pi, n, 4242);
    const auto hist = processes::gap_histogram(seq);
    long total = 0;
    for (const auto &[g, c] : hist) total += c;
    const double p0 = static_cast<double>(hist.at(0)) / total;
    const double sigma = std::sqrt(0.25 / total);
    CHECK(std::abs(p0 - 0.5) < 5.0 * sigma);
}

TEST_CASE("sample_classical matches the stationary symbol marginal") {
    auto &rng = test_rng();
    const auto T = oracles::random_tensor(3, 3, rng);
    const auto s = summarize(T);
    const RealVector marginal = s.E * s.pi;
    const long n = 1000000;
    const auto seq = sample_classical(T, s.pi, n, 99);
    RealVector counts = RealVector::Zero(3);
    for (int x : seq.symbols) counts(x) += 1.0;
    for (int x = 0; x < 3; ++x) {
        const double p = marginal(x);
        const double sigma = std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(counts(x) / n - p) < 5.0 * sigma);
    }
}

TEST_CASE("entropy-preserving compression at full width is a relabeling") {
    auto &rng = test_rng();
    const auto T = oracles::random_tensor(2, 4, rng);
    const auto full = compress_entropy_preserving(T, 4);
    for (int x = 0; x < 2; ++x)
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                CHECK(full.tensor[x](a, b) ==
                      doctest::Approx(
                          T[x](full.permutation[static_cast<std::size_t>(a)],
                               full.permutation[static_cast<std::size_t>(b)]))
                          .epsilon(1e-12));
}

TEST_CASE("entropy-preserving compression produces stochastic columns") {
    const auto T = renewal_classical(4);
    const auto c = compress_entropy_preserving(T, 2);
    RealVector colsum = RealVector::Zero(2);
    for (int x = 0; x < 2; ++x) colsum += c.tensor[x].colwise().sum().transpose();
    CHECK((colsum - RealVector::Ones(2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("entropy-preserving compression keeps its target steady state") {
    const auto T = renewal_classical(32);
    const auto c = compress_entropy_preserving(T, 16);
    const auto s = summarize(c.tensor);
    CHECK((s.pi - c.compressed_steady).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(spectral::shannon_entropy(c.compressed_steady) ==
          doctest::Approx(spectral::shannon_entropy(s.pi)).epsilon(1e-8));
}

TEST_CASE("entropy-preserving compression argument checks") {
    const auto T = renewal_classical(4);
    CHECK_THROWS_AS(compress_entropy_preserving(T, 5), ArgumentError);
    CHECK_THROWS_AS(compress_entropy_preserving(T, 0), ArgumentError);
}

TEST_CASE("spectral compression collapses an iid model exactly") {
    // Every column identical: the process is iid, one memory state suffices.
    auto &rng = test_rng();
    RealVector joint(2 * 3);
    for (int i = 0; i < 6; ++i) joint(i) = oracles::unif(rng) + 0.1;
    joint /= joint.sum();
    TransitionTensor T = TransitionTensor::zeros(2, 3);
    for (int x = 0; x < 2; ++x)
        for (int a = 0; a < 3; ++a) T[x].row(a).setConstant(joint(x * 3 + a));

    const auto c = compress_spectral(T, 1);
    CHECK(c.d == 2);
    CHECK(c.D == 1);
    CHECK(c[1](0, 0) == doctest::Approx(T[1].col(0).sum()).epsilon(1e-10));
    CHECK(c[0](0, 0) + c[1](0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral compression yields valid tensors") {
    const auto T = renewal_classical(8);
    const auto c = compress_spectral(T, 4);
    c.validate(1e-12);
    for (int x = 0; x < 2; ++x) {
        CHECK(c[x].minCoeff() >= 0.0);
        CHECK(c[x].maxCoeff() <= 1.0 + 1e-12);
    }
}

TEST_CASE("both compressions stay valid across every width") {
    auto &rng = test_rng();
    for (int trial = 0; trial < 3; ++trial) {
        const auto T = oracles::random_tensor(2, 5, rng);
        for (int Dp = 1; Dp < 5; ++Dp) {
            CHECK_NOTHROW(compress_entropy_preserving(T, Dp).tensor.validate(1e-9));
            CHECK_NOTHROW(compress_spectral(T, Dp).validate(1e-9));
        }
    }
}

TEST_CASE("baum_welch memoryless fit recovers empirical frequencies") {
    SymbolSequence seq{{0, 1, 1, 0, 1, 1, 1, 0}, 2};
    const auto fit = baum_welch(seq, 1);
    CHECK(fit.J(0, 0) == doctest::Approx(1.0));
    CHECK(fit.E(0, 0) == doctest::Approx(3.0 / 8.0).epsilon(1e-9));
    CHECK(fit.E(1, 0) == doctest::Approx(5.0 / 8.0).epsilon(1e-9));
}

TEST_CASE("baum_welch beats the iid baseline on renewal data") {
    const auto T = renewal_classical(2);
    const auto s = summarize(T);
    const auto seq = sample_classical(T, s.pi, 10000, 31337);

    BaumWelchConfig cfg;
    cfg.seed = 5;
    const auto fit = baum_welch(seq, 2, std::nullopt, cfg);

    double n1 = 0;
    for (int x : seq.symbols) n1 += x;
    const double f1 = n1 / static_cast<double>(seq.size());
    const double iid_ll = n1 * std::log(f1) +
                          (static_cast<double>(seq.size()) - n1) * std::log(1.0 - f1);
    CHECK(fit.log_likelihood.back() >= iid_ll);
}

TEST_CASE("baum_welch log-likelihood trace is monotone") {
    const auto T = renewal_classical(4);
    const auto s = summarize(T);
    const auto seq = sample_classical(T, s.pi, 2000, 7);
    BaumWelchConfig cfg;
    cfg.seed = 11;
    cfg.max_iters = 100;
    const auto fit = baum_welch(seq, 3, std::nullopt, cfg);
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i)
        CHECK(fit.log_likelihood[i] >= fit.log_likelihood[i - 1] - 1e-8);
}

TEST_CASE("baum_welch is deterministic given the seed") {
    const auto T = renewal_classical(3);
    const auto s = summarize(T);
    const auto seq = sample_classical(T, s.pi, 500, 21);
    BaumWelchConfig cfg;
    cfg.seed = 77;
    cfg.max_iters = 40;
    const auto a = baum_welch(seq, 2, std::nullopt, cfg);
    const auto b = baum_welch(seq, 2, std::nullopt, cfg);
    CHECK((a.J - b.J).norm() == 0.0);
    CHECK((a.E - b.E).norm() == 0.0);
    CHECK(a.log_likelihood == b.log_likelihood);
}

TEST_CASE("bhattacharyya_exhaustive fixed points") {
    const auto T = renewal_classical(3);
    const auto s = summarize(T);
    CHECK(bhattacharyya_exhaustive(T, T, s.pi, s.pi, 6) == doctest::Approx(1.0).epsilon(1e-10));

    // Disjoint-support deterministic emitters.
    TransitionTensor zeros = TransitionTensor::zeros(2, 1);
    zeros[0](0, 0) = 1.0;
    TransitionTensor ones = TransitionTensor::zeros(2, 1);
    ones[1](0, 0) = 1.0;
    RealVector one(1);
    one << 1.0;
    CHECK(bhattacharyya_exhaustive(zeros, ones, one, one, 5) == doctest::Approx(0.0));
}

TEST_CASE("bhattacharyya_exhaustive enforces the enumeration guard") {
    const auto T = renewal_classical(2);
    const auto s = summarize(T);
    CHECK_THROWS_AS(bhattacharyya_exhaustive(T, T, s.pi, s.pi, 40), SizeError);
}

TEST_CASE("similarity_decay_rate vanishes on identical models") {
    const auto T = renewal_classical(4);
    const auto r = similarity_decay_rate(T, T);
    CHECK(std::abs(r.rate) < 1e-9);
}

TEST_CASE("similarity_decay_rate detects the first truncation step") {
    const auto T = renewal_classical(32);
    const auto c = compress_entropy_preserving(T, 31);
    const auto r = similarity_decay_rate(T, c.tensor);
    CHECK(r.rate > 1e-6);
}

TEST_CASE("similarity_decay_rate tracks the brute-force cosine similarity") {
    auto &rng = test_rng();
    const auto T = oracles::random_tensor(2, 3, rng);
    const auto Tb = oracles::random_tensor(2, 3, rng);
    const auto sA = summarize(T);
    const auto sB = summarize(Tb);
    const auto r = similarity_decay_rate(T, Tb);

    const auto cosine = [&](int L) {
        double pp = 0, qq = 0, pq = 0;
        for (const auto &str : oracles::all_strings(2, L)) {
            const double p = oracles::classical_prob(T, sA.pi, str);
            const double q = oracles::classical_prob(Tb, sB.pi, str);
            pp += p * p;
            qq += q * q;
            pq += p * q;
        }
        return pq / std::sqrt(pp * qq);
    };
    const double ratio = cosine(10) / cosine(8);
    CHECK(std::abs(ratio - std::exp(-2.0 * r.rate)) < 0.05 * std::exp(-2.0 * r.rate));
}

TEST_CASE("similarity_decay_rate rejects alphabet mismatch") {
    const auto T2 = renewal_classical(2);
    TransitionTensor T1 = TransitionTensor::zeros(1, 2);
    T1[0] = T2.transition_matrix();
    CHECK_THROWS_AS(similarity_decay_rate(T2, T1), ShapeError);
}

TEST_CASE("factorized_tensor assembles the product form") {
    RealMatrix J(2, 2);
    J << 0.3, 0.6, 0.7, 0.4;
    RealMatrix E(2, 2);
    E << 0.9, 0.2, 0.1, 0.8;
    const auto T = factorized_tensor(J, E);
    T.validate(1e-12);
    CHECK(T[0](1, 0) == doctest::Approx(0.7 * 0.9));
    CHECK(T[1](0, 1) == doctest::Approx(0.6 * 0.8));
}
