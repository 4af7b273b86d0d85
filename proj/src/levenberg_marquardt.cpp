#include "nvmux/levenberg_marquardt.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "nvmux/errors.hpp"

namespace nvmux::fitting {

namespace {

constexpr double max_damping = 1e16;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Eigen::MatrixXd LmResult::covariance() const {
    const auto p = static_cast<std::size_t>(parameters.size());
    const double dof = residual_count > p ? static_cast<double>(residual_count - p) : 1.0;
    const double s2 = 2.0 * cost / dof;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (!lu.isInvertible())
        return Eigen::MatrixXd::Constant(jtj.rows(), jtj.cols(), std::numeric_limits<double>::infinity());
    return s2 * lu.inverse();
}

LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd initial, const LmOptions& options) {
    Eigen::VectorXd p = std::move(initial);
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    fn(p, r, &jac);
    if (!r.allFinite()) throw ConvergenceError("residuals are not finite at the initial point", to_std(p));
    double cost = 0.5 * r.squaredNorm();
    const double cost_floor = cost * 1e-28;

    double lambda = options.initial_damping;
    Eigen::VectorXd trial_r;
    int iter = 0;
    bool converged = cost == 0.0;
    while (!converged && iter < options.max_iterations) {
        ++iter;
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        Eigen::VectorXd scale = a.diagonal();
        for (Eigen::Index i = 0; i < scale.size(); ++i)
            if (!(scale[i] > 0.0)) scale[i] = 1.0;

        Eigen::MatrixXd damped = a;
        damped.diagonal() += lambda * scale;
        const Eigen::VectorXd step = damped.ldlt().solve(-g);
        const Eigen::VectorXd trial = p + step;
        double trial_cost = std::numeric_limits<double>::infinity();
        if (step.allFinite()) {
            fn(trial, trial_r, nullptr);
            if (trial_r.allFinite()) trial_cost = 0.5 * trial_r.squaredNorm();
        }

        if (trial_cost < cost) {
            const double rel = (cost - trial_cost) / cost;
            p = trial;
            fn(p, r, &jac);
            cost = trial_cost;
            lambda = std::max(lambda / options.damping_factor, 1e-12);
            if (rel < options.relative_tolerance || cost <= cost_floor) converged = true;
        } else {
            lambda *= options.damping_factor;
            // No descent left at any damping: a minimum to working precision.
            if (lambda > max_damping) converged = true;
        }
    }
    if (!converged) throw ConvergenceError("Levenberg-Marquardt did not converge within the iteration limit", to_std(p));

    LmResult out;
    out.parameters = p;
    out.cost = cost;
    out.iterations = iter;
    out.jtj = jac.transpose() * jac;
    out.residual_count = static_cast<std::size_t>(r.size());
    return out;
}

}  // namespace nvmux::fitting
