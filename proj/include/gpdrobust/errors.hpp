#pragma once

#include <stdexcept>
#include <string>

namespace gpdrobust {

struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// 2xi+1 <= 0: Fisher information does not exist.
struct regularity_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct quadrature_error : std::runtime_error {
    double error_estimate;
    quadrature_error(const std::string& what, double est)
        : std::runtime_error(what), error_estimate(est) {}
};

struct solver_error : std::runtime_error {
    int iterations;
    double residual;
    solver_error(const std::string& what, int iters, double res)
        : std::runtime_error(what), iterations(iters), residual(res) {}
};

struct bracket_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gpdrobust
