#ifndef STOCHSIM_TYPES_HPP
#define STOCHSIM_TYPES_HPP

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace stochsim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// A finite run of outcomes in {0,...,d-1}.
struct SymbolSequence {
    std::vector<int> symbols;
    int d = 2;

    std::size_t size() const { return symbols.size(); }
    bool empty() const { return symbols.empty(); }
};

} // namespace stochsim

#endif
