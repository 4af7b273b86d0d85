#pragma once

#include <functional>

#include <Eigen/Core>

namespace nvmux::fitting {

// Fills the residual vector and, when the pointer is non-null, its Jacobian
// with respect to the parameters.
using ResidualFn = std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residual,
                                      Eigen::MatrixXd* jacobian)>;

struct LmOptions {
    double initial_damping = 1e-3;
    double damping_factor = 10.0;
    int max_iterations = 200;
    double relative_tolerance = 1e-10;  // on the cost change of an accepted step
};

struct LmResult {
    Eigen::VectorXd parameters;
    double cost = 0.0;  // 0.5 * |r|^2
    int iterations = 0;
    Eigen::MatrixXd jtj;  // J^T J at the solution
    std::size_t residual_count = 0;

    // s^2 (J^T J)^-1 with s^2 = |r|^2 / (m - p). Non-finite entries signal a
    // singular normal matrix.
    Eigen::MatrixXd covariance() const;
};

// Minimizes 0.5 |r(p)|^2 from `initial` with Marquardt-scaled damping.
// Throws ConvergenceError (carrying the best parameters) when the iteration
// budget runs out first.
LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd initial, const LmOptions& options = {});

}  // namespace nvmux::fitting
