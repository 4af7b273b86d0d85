#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "nvmux/crosstalk.hpp"
#include "nvmux/qubit.hpp"

namespace nvmux::spin {

// Green-readout fluorescence F = bright * p0 + dark * p1. The defaults are a
// generic 30 % spin contrast, not a property of any particular setup.
struct ReadoutModel {
    double bright = 1.0;
    double dark = 0.7;

    double fluorescence(const QubitState& s) const { return bright * s.population(0) + dark * s.population(1); }
};

inline constexpr double default_t2_star_ns = 2000.0;
// Microwave detuning placing a full fringe period at tau = 386 ns.
inline constexpr double default_ramsey_detuning_mhz = 1000.0 / 386.0;

struct SequenceResult {
    std::vector<double> tau_ns;
    std::vector<double> contrast;
    std::vector<double> f_pi2;
    std::vector<double> f_3pi2;
    std::vector<double> population_1;  // p(|1>) just before readout, pi/2 variant

    void validate() const;
};

// (F_3pi/2 - F_pi/2) / (F_3pi/2 + F_pi/2)
double contrast(double f_pi2, double f_3pi2);

struct RamseyOptions {
    std::optional<double> t2_star_ns = default_t2_star_ns;
    ReadoutModel readout{};
    // Optional coherent Z phase imprinted by the laser (AC-Stark). Off by default.
    double ac_stark_phase_rad = 0.0;
};

// pi/2_x -> precess tau/2 -> [laser channel] -> precess tau/2 -> pi/2_x or 3pi/2_x
// -> readout, for every tau in the grid. Without a breakdown no laser is applied.
SequenceResult ramsey_with_crosstalk(double detuning_mw_mhz, std::span<const double> tau_grid_ns,
                                     const std::optional<crosstalk::CrosstalkBreakdown>& breakdown,
                                     const RamseyOptions& options = {});

// 1 - C / C_ref, clamped to [0, 1]. Throws DomainError when C_ref == 0.
double estimate_crosstalk_from_contrast(double contrast_at_tau, double reference_contrast_at_tau);

// Least-squares scale k minimizing sum (C - k C_ref)^2 over the shared grid:
// the fringe amplitude of `run` relative to `reference`.
double fit_amplitude_ratio(const SequenceResult& run, const SequenceResult& reference);

// CSV with header "tau_ns,contrast,f_pi2,f_3pi2".
void write_csv(std::ostream& os, const SequenceResult& result);

}  // namespace nvmux::spin
