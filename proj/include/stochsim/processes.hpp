#ifndef STOCHSIM_PROCESSES_HPP
#define STOCHSIM_PROCESSES_HPP

#include <map>

#include "stochsim/classical.hpp"
#include "stochsim/quantum.hpp"

namespace stochsim::processes {

// Discrete renewal process of period N: a stochastic clock whose 0-runs
// between consecutive 1s are uniform on {0,...,N-1}. Memory state k counts
// the symbols since the last tick (paper-style 1-based k maps to index k-1).
hmm::TransitionTensor renewal_classical(int N);

// Analytic normalized Kraus family of the same process: K^0 shifts the
// counter, K^1 resets it from the last state with amplitude 1/sqrt(N).
qsim::QuantumTensor renewal_quantum(int N);

// Counts of 0-run lengths between consecutive 1s; the open prefix before the
// first 1 and the suffix after the last 1 are dropped. Binary alphabet only.
std::map<long, long> gap_histogram(const SymbolSequence &seq);

} // namespace stochsim::processes

#endif
