#include "nvmux/qubit.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "nvmux/errors.hpp"
#include "nvmux/units.hpp"

namespace nvmux::spin {

using cd = std::complex<double>;

Axis axis_from_string(std::string_view s) {
    if (s == "x" || s == "X") return Axis::X;
    if (s == "y" || s == "Y") return Axis::Y;
    if (s == "z" || s == "Z") return Axis::Z;
    throw DomainError("unknown rotation axis '" + std::string(s) + "'");
}

QubitState::QubitState() : rho_(Matrix2c::Zero()) { rho_(0, 0) = 1.0; }

QubitState QubitState::from_density(const Matrix2c& rho, double leaked, double tol) {
    QubitState s;
    s.rho_ = rho;
    s.leaked_ = leaked;
    if (!s.is_valid(tol)) throw DomainError("matrix is not a valid density matrix");
    if (!(leaked >= 0.0) || leaked > rho(0, 0).real() + tol) throw DomainError("leaked population out of range");
    return s;
}

bool QubitState::is_valid(double tol) const {
    if (!rho_.allFinite()) return false;
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(rho_.trace() - cd(1.0, 0.0)) > tol) return false;
    const Matrix2c herm = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

QubitState apply_rotation(const QubitState& state, Axis axis, double angle) {
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    Matrix2c u;
    switch (axis) {
        case Axis::X: u << cd(c, 0), cd(0, -s), cd(0, -s), cd(c, 0); break;
        case Axis::Y: u << cd(c, 0), cd(-s, 0), cd(s, 0), cd(c, 0); break;
        case Axis::Z: u << cd(c, -s), cd(0, 0), cd(0, 0), cd(c, s); break;
    }
    QubitState out = state;
    out.rho_ = u * state.rho_ * u.adjoint();
    return out;
}

QubitState free_precession(const QubitState& state, double detuning_mhz, double tau_ns,
                           std::optional<double> t2_star_ns, double elapsed_ns) {
    if (!(tau_ns >= 0.0)) throw DomainError("precession time must be >= 0");
    double envelope = 1.0;
    if (t2_star_ns) {
        if (!(*t2_star_ns > 0.0)) throw DomainError("T2* must be positive");
        const double before = elapsed_ns / *t2_star_ns;
        const double after = (elapsed_ns + tau_ns) / *t2_star_ns;
        envelope = std::exp(-(after * after - before * before));
    }
    const double phi = units::phase_rad(detuning_mhz, tau_ns);
    QubitState out = state;
    const cd rotated = state.rho_(0, 1) * std::polar(envelope, phi);
    out.rho_(0, 1) = rotated;
    out.rho_(1, 0) = std::conj(rotated);
    return out;
}

QubitState apply_crosstalk_channel(const QubitState& state, const crosstalk::CrosstalkBreakdown& breakdown) {
    const double g = breakdown.total;
    if (!(g >= 0.0 && g <= 1.0)) throw DomainError("crosstalk probability must lie in [0, 1]");
    const double to_minus = breakdown.landing_probability(-1);
    const double to_zero = breakdown.landing_probability(0);
    const double to_one = breakdown.landing_probability(1);

    QubitState out = state;
    out.rho_ = (1.0 - g) * state.rho_;
    out.rho_(0, 0) += to_zero + to_minus;
    out.rho_(1, 1) += to_one;
    out.leaked_ = (1.0 - g) * state.leaked_ + to_minus;
    return out;
}

}  // namespace nvmux::spin
