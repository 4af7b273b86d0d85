#include "nvmux/ramsey.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "nvmux/errors.hpp"
#include "nvmux/format.hpp"

namespace nvmux::spin {

void SequenceResult::validate() const {
    const auto n = tau_ns.size();
    if (contrast.size() != n || f_pi2.size() != n || f_3pi2.size() != n || population_1.size() != n)
        throw DomainError("sequence result columns differ in length");
    for (double c : contrast)
        if (!(c >= -1.0 && c <= 1.0)) throw DomainError("contrast outside [-1, 1]");
}

double contrast(double f_pi2, double f_3pi2) {
    const double sum = f_3pi2 + f_pi2;
    if (sum == 0.0) throw DomainError("zero total fluorescence");
    return (f_3pi2 - f_pi2) / sum;
}

SequenceResult ramsey_with_crosstalk(double detuning_mw_mhz, std::span<const double> tau_grid_ns,
                                     const std::optional<crosstalk::CrosstalkBreakdown>& breakdown,
                                     const RamseyOptions& options) {
    constexpr double half_pi = 0.5 * std::numbers::pi;
    for (std::size_t i = 0; i < tau_grid_ns.size(); ++i) {
        if (!(tau_grid_ns[i] >= 0.0)) throw DomainError("tau grid must be non-negative");
        if (i > 0 && tau_grid_ns[i] < tau_grid_ns[i - 1]) throw DomainError("tau grid must be ascending");
    }

    SequenceResult out;
    for (double tau : tau_grid_ns) {
        QubitState s = apply_rotation(QubitState{}, Axis::X, half_pi);
        s = free_precession(s, detuning_mw_mhz, 0.5 * tau, options.t2_star_ns, 0.0);
        if (breakdown) {
            s = apply_crosstalk_channel(s, *breakdown);
            if (options.ac_stark_phase_rad != 0.0) s = apply_rotation(s, Axis::Z, options.ac_stark_phase_rad);
        }
        s = free_precession(s, detuning_mw_mhz, 0.5 * tau, options.t2_star_ns, 0.5 * tau);

        const QubitState final_pi2 = apply_rotation(s, Axis::X, half_pi);
        const QubitState final_3pi2 = apply_rotation(s, Axis::X, 3.0 * half_pi);
        const double f1 = options.readout.fluorescence(final_pi2);
        const double f3 = options.readout.fluorescence(final_3pi2);
        out.tau_ns.push_back(tau);
        out.f_pi2.push_back(f1);
        out.f_3pi2.push_back(f3);
        out.contrast.push_back(contrast(f1, f3));
        out.population_1.push_back(final_pi2.population(1));
    }
    return out;
}

double estimate_crosstalk_from_contrast(double contrast_at_tau, double reference_contrast_at_tau) {
    if (reference_contrast_at_tau == 0.0) throw DomainError("reference contrast is zero");
    return std::clamp(1.0 - contrast_at_tau / reference_contrast_at_tau, 0.0, 1.0);
}

double fit_amplitude_ratio(const SequenceResult& run, const SequenceResult& reference) {
    if (run.contrast.size() != reference.contrast.size()) throw DomainError("runs use different tau grids");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < run.contrast.size(); ++i) {
        num += run.contrast[i] * reference.contrast[i];
        den += reference.contrast[i] * reference.contrast[i];
    }
    if (den == 0.0) throw DomainError("reference fringe has zero amplitude");
    return num / den;
}

void write_csv(std::ostream& os, const SequenceResult& result) {
    os << "tau_ns,contrast,f_pi2,f_3pi2\n";
    for (std::size_t i = 0; i < result.tau_ns.size(); ++i)
        os << fmt_double(result.tau_ns[i]) << ',' << fmt_double(result.contrast[i]) << ','
           << fmt_double(result.f_pi2[i]) << ',' << fmt_double(result.f_3pi2[i]) << '\n';
}

}  // namespace nvmux::spin
