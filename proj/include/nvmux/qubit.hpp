#pragma once

#include <complex>
#include <optional>

#include <Eigen/Core>

#include "nvmux/crosstalk.hpp"

namespace nvmux::spin {

using Matrix2c = Eigen::Matrix2cd;

enum class Axis { X, Y, Z };

Axis axis_from_string(std::string_view s);

// Density matrix over {|0> = |m_s=0>, |1> = |m_s=+1>}.
//
// Population that decayed into m_s=-1 has left the qubit subspace; it carries
// no coherence and reads out like m_s=0 under green illumination, so it is
// stored on the |0><0| element and tracked separately in leaked().
class QubitState {
public:
    QubitState();  // |0><0|

    // Throws DomainError if rho is not a valid density matrix within tol.
    static QubitState from_density(const Matrix2c& rho, double leaked = 0.0, double tol = 1e-9);

    const Matrix2c& rho() const { return rho_; }
    double population(int level) const { return rho_(level, level).real(); }
    std::complex<double> coherence() const { return rho_(0, 1); }
    double leaked() const { return leaked_; }

    // Hermitian, unit trace, PSD, all within tol.
    bool is_valid(double tol = 1e-9) const;

private:
    friend QubitState apply_rotation(const QubitState&, Axis, double);
    friend QubitState free_precession(const QubitState&, double, double, std::optional<double>, double);
    friend QubitState apply_crosstalk_channel(const QubitState&, const crosstalk::CrosstalkBreakdown&);

    Matrix2c rho_;
    double leaked_ = 0.0;
};

// rho -> U rho U^dagger with U = exp(-i angle sigma_axis / 2).
QubitState apply_rotation(const QubitState& state, Axis axis, double angle);

// Precession about Z at `detuning_mhz` for `tau_ns`; the |1> amplitude picks
// up exp(-i 2 pi detuning tau). With t2_star the coherence follows a Gaussian
// envelope exp(-(t/T2*)^2) in the total free-precession time t. `elapsed_ns`
// is the free time already spent since the last gate, so a window split into
// pieces decays exactly like the unsplit window.
QubitState free_precession(const QubitState& state, double detuning_mhz, double tau_ns,
                           std::optional<double> t2_star_ns, double elapsed_ns = 0.0);

// Laser-induced projection: rho -> (1 - G) rho + sum_j p_j |j><j|, with G the
// breakdown total and p_j its landing probabilities. Landings in m_s=-1 are
// booked on |0><0| and added to leaked().
QubitState apply_crosstalk_channel(const QubitState& state, const crosstalk::CrosstalkBreakdown& breakdown);

}  // namespace nvmux::spin
