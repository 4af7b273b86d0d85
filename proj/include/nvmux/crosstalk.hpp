#pragma once

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace nvmux::crosstalk {

// Excited-state orbital manifold of the NV- center.
enum class ExcitedState { E1, E2, Ex, Ey, A1, A2 };

std::string_view to_string(ExcitedState k);
ExcitedState excited_state_from_string(std::string_view s);

// Ground spin projections m_s in {-1, 0, +1}.
bool is_ground_label(int m_s);

// One optical line i -> k of an emitter.
struct OpticalTransition {
    int ground_initial = 0;
    ExcitedState excited = ExcitedState::Ex;
    double frequency_ghz = 0.0;
    double rabi = 0.0;                // optical Rabi frequency, rad/us
    std::map<int, double> branching;  // ground j -> decay rate k->j, rad/us

    void validate() const;
};

struct ReadoutPulse {
    double laser_frequency_ghz = 0.0;
    double duration_us = 0.0;
};

struct EmitterOpticalModel {
    std::string label;
    std::vector<OpticalTransition> transitions;

    void validate() const;
    // The spin-conserving m_s=0 <-> Ex line if present, otherwise the first
    // transition. Used as the default resonant-readout line.
    const OpticalTransition& readout_transition() const;
};

// (i, k, j): excite from ground i into k, decay into ground j.
struct DecayPath {
    int ground_initial = 0;
    ExcitedState excited = ExcitedState::Ex;
    int ground_final = 0;
    auto operator<=>(const DecayPath&) const = default;
};

struct CrosstalkBreakdown {
    std::map<DecayPath, double> per_transition;
    double total = 0.0;      // clamped to [0, 1]
    double raw_sum = 0.0;    // sum of per_transition before clamping
    DecayPath dominant{};

    // Total probability of landing in ground state j, rescaled so the
    // landing probabilities sum to `total`.
    double landing_probability(int ground_final) const;

    // Breakdown carrying a single decay path, used to inject a known Gamma.
    static CrosstalkBreakdown single(double gamma, DecayPath path = {0, ExcitedState::Ex, 0});
};

// Decay rate of an NV excited state with a 12 ns lifetime, rad/us.
// Not a measured value of any particular emitter; override when known.
inline constexpr double default_decay_rate = 1000.0 / 12.0;
// Default multi-shot resonant-readout pulse length, us. Assumed value.
inline constexpr double default_msr_duration_us = 0.6;

// Probability that a pulse of length `duration` (us) with Rabi frequency
// `omega` and detuning `delta` (both rad/us) drives an excitation that decays
// at rate `gamma`:
//
//     1 - exp(-gamma * omega^2 * T / (2 * (omega^2 + delta^2)))
//
// Throws DomainError for negative omega, gamma or duration.
double transition_crosstalk(double omega, double delta, double gamma, double duration);

// Sums the per-path probabilities of every transition reachable from a
// populated ground state. Each path is weighted by the population of its
// initial ground state. The laser detuning from each line is
// pulse.laser_frequency - transition.frequency, converted to rad/us.
CrosstalkBreakdown emitter_crosstalk(const EmitterOpticalModel& model, const ReadoutPulse& pulse,
                                     const std::map<int, double>& populations);

// Smallest |delta| (GHz) at which transition_crosstalk drops to gamma_target.
// Returns 0 when the target is already met on resonance.
double min_safe_detuning(double omega, double gamma, double duration, double gamma_target);

// Optical Rabi frequency (rad/us) that makes transition_crosstalk pass through
// (delta_ref_ghz, gamma_ref). Throws UnsolvableError when no omega does.
double calibrate_rabi(double delta_ref_ghz, double gamma_ref, double gamma, double duration);

}  // namespace nvmux::crosstalk
