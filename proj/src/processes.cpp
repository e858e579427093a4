#include "stochsim/processes.hpp"

#include <cmath>

namespace stochsim::processes {

hmm::TransitionTensor renewal_classical(int N) {
    if (N < 2) throw ArgumentError("renewal_classical: period must be at least 2");
    hmm::TransitionTensor T = hmm::TransitionTensor::zeros(2, N);
    for (int k = 1; k <= N; ++k) {
        if (k < N) T[0](k, k - 1) = static_cast<double>(N - k) / (N + 1 - k);
        T[1](0, k - 1) = 1.0 / (N + 1 - k);
    }
    T.validate(1e-12);
    return T;
}

qsim::QuantumTensor renewal_quantum(int N) {
    if (N < 2) throw ArgumentError("renewal_quantum: period must be at least 2");
    qsim::QuantumTensor K = qsim::QuantumTensor::zeros(2, N);
    for (int k = 1; k < N; ++k) K[0](k, k - 1) = 1.0;
    const double amp = 1.0 / std::sqrt(static_cast<double>(N));
    for (int k = 1; k <= N; ++k) K[1](k - 1, N - 1) = amp;
    K.normalized = true;
    K.validate(1e-12);
    return K;
}

std::map<long, long> gap_histogram(const SymbolSequence &seq) {
    if (seq.d != 2)
        throw DomainError("gap_histogram: defined for binary sequences only");
    std::map<long, long> hist;
    long since_last = -1; // symbols since the previous 1; -1 before the first
    for (int s : seq.symbols) {
        if (s != 0 && s != 1)
            throw DomainError("gap_histogram: symbol out of range");
        if (s == 1) {
            if (since_last >= 0) ++hist[since_last];
            since_last = 0;
        } else if (since_last >= 0) {
            ++since_last;
        }
    }
    return hist;
}

} // namespace stochsim::processes
