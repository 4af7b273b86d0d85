#include "nvmux/crosstalk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nvmux/errors.hpp"
#include "nvmux/units.hpp"

namespace nvmux::crosstalk {

namespace {

constexpr ExcitedState all_excited[] = {ExcitedState::E1, ExcitedState::E2, ExcitedState::Ex,
                                        ExcitedState::Ey, ExcitedState::A1, ExcitedState::A2};

// -ln(1 - p), accurate for small p.
double exposure_from_probability(double p) { return -std::log1p(-p); }

}  // namespace

std::string_view to_string(ExcitedState k) {
    switch (k) {
        case ExcitedState::E1: return "E1";
        case ExcitedState::E2: return "E2";
        case ExcitedState::Ex: return "Ex";
        case ExcitedState::Ey: return "Ey";
        case ExcitedState::A1: return "A1";
        case ExcitedState::A2: return "A2";
    }
    return "?";
}

ExcitedState excited_state_from_string(std::string_view s) {
    for (auto k : all_excited)
        if (to_string(k) == s) return k;
    throw DomainError("unknown excited state '" + std::string(s) + "'");
}

bool is_ground_label(int m_s) { return m_s >= -1 && m_s <= 1; }

void OpticalTransition::validate() const {
    if (!is_ground_label(ground_initial)) throw DomainError("ground state label must be -1, 0 or +1");
    if (!(frequency_ghz > 0.0) || !std::isfinite(frequency_ghz))
        throw DomainError("transition frequency must be positive");
    if (!(rabi >= 0.0) || !std::isfinite(rabi)) throw DomainError("optical Rabi frequency must be >= 0");
    bool any_positive = false;
    for (const auto& [j, rate] : branching) {
        if (!is_ground_label(j)) throw DomainError("branching target must be -1, 0 or +1");
        if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("branching rates must be >= 0");
        any_positive = any_positive || rate > 0.0;
    }
    if (!any_positive) throw DomainError("at least one branching rate must be positive");
}

void EmitterOpticalModel::validate() const {
    if (transitions.empty()) throw DomainError("emitter '" + label + "' has no transitions");
    for (const auto& t : transitions) t.validate();
}

const OpticalTransition& EmitterOpticalModel::readout_transition() const {
    if (transitions.empty()) throw DomainError("emitter '" + label + "' has no transitions");
    auto it = std::find_if(transitions.begin(), transitions.end(), [](const OpticalTransition& t) {
        return t.ground_initial == 0 && t.excited == ExcitedState::Ex;
    });
    return it != transitions.end() ? *it : transitions.front();
}

double CrosstalkBreakdown::landing_probability(int ground_final) const {
    if (raw_sum <= 0.0) return 0.0;
    double sum = 0.0;
    for (const auto& [path, p] : per_transition)
        if (path.ground_final == ground_final) sum += p;
    return total * sum / raw_sum;
}

CrosstalkBreakdown CrosstalkBreakdown::single(double gamma, DecayPath path) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("crosstalk probability must lie in [0, 1]");
    CrosstalkBreakdown b;
    b.per_transition[path] = gamma;
    b.total = gamma;
    b.raw_sum = gamma;
    b.dominant = path;
    return b;
}

double transition_crosstalk(double omega, double delta, double gamma, double duration) {
    if (!(omega >= 0.0)) throw DomainError("omega must be >= 0");
    if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
    if (!(duration >= 0.0)) throw DomainError("duration must be >= 0");
    if (omega == 0.0) return 0.0;
    // omega^2 / (omega^2 + delta^2) written to stay finite for huge |delta|
    const double r = delta / omega;
    const double lorentzian = 1.0 / (1.0 + r * r);
    const double exponent = 0.5 * gamma * duration * lorentzian;
    return std::clamp(-std::expm1(-exponent), 0.0, 1.0);
}

CrosstalkBreakdown emitter_crosstalk(const EmitterOpticalModel& model, const ReadoutPulse& pulse,
                                     const std::map<int, double>& populations) {
    model.validate();
    if (!(pulse.duration_us >= 0.0)) throw DomainError("pulse duration must be >= 0");
    double pop_sum = 0.0;
    for (const auto& [i, p] : populations) {
        if (!is_ground_label(i)) throw DomainError("population key must be -1, 0 or +1");
        if (!(p >= 0.0) || p > 1.0 + 1e-9) throw DomainError("populations must lie in [0, 1]");
        pop_sum += p;
    }
    if (std::abs(pop_sum - 1.0) > 1e-9) throw DomainError("populations must sum to 1");

    CrosstalkBreakdown out;
    double best = -1.0;
    for (const auto& t : model.transitions) {
        auto pit = populations.find(t.ground_initial);
        if (pit == populations.end() || pit->second <= 0.0) continue;
        const double delta = units::angular_mhz_from_ghz(pulse.laser_frequency_ghz - t.frequency_ghz);
        for (const auto& [j, rate] : t.branching) {
            const double g = pit->second * transition_crosstalk(t.rabi, delta, rate, pulse.duration_us);
            const DecayPath path{t.ground_initial, t.excited, j};
            out.per_transition[path] += g;
            out.raw_sum += g;
        }
    }
    for (const auto& [path, g] : out.per_transition) {
        if (g > best) {
            best = g;
            out.dominant = path;
        }
    }
    out.total = std::clamp(out.raw_sum, 0.0, 1.0);
    return out;
}

double min_safe_detuning(double omega, double gamma, double duration, double gamma_target) {
    if (!(gamma_target > 0.0 && gamma_target < 1.0)) throw DomainError("gamma_target must lie in (0, 1)");
    const double on_resonance = transition_crosstalk(omega, 0.0, gamma, duration);
    if (gamma_target >= on_resonance) return 0.0;

    const double exposure = exposure_from_probability(gamma_target);
    const double ratio = gamma * duration / (2.0 * exposure) - 1.0;
    double delta = omega * std::sqrt(std::max(ratio, 0.0));

    auto above_target = [&](double d) { return transition_crosstalk(omega, d, gamma, duration) > gamma_target; };

    // The closed form can land an ulp or two on the wrong side of the target.
    for (int step = 0; step < 64 && delta > 0.0 && above_target(delta); ++step)
        delta = std::nextafter(delta, std::numeric_limits<double>::infinity());

    if (!(delta > 0.0) || !std::isfinite(delta) || above_target(delta)) {
        double lo = 0.0;
        double hi = std::max(omega, 1e-300);
        while (above_target(hi)) hi *= 2.0;
        for (int it = 0; it < 200 && std::nextafter(lo, hi) < hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (above_target(mid) ? lo : hi) = mid;
        }
        delta = hi;
    }
    // Callers convert back from GHz, so the guarantee must survive that round trip.
    double ghz = units::ghz_from_angular_mhz(delta);
    for (int step = 0; step < 64 && above_target(units::angular_mhz_from_ghz(ghz)); ++step)
        ghz = std::nextafter(ghz, std::numeric_limits<double>::infinity());
    return ghz;
}

double calibrate_rabi(double delta_ref_ghz, double gamma_ref, double gamma, double duration) {
    if (!(gamma_ref > 0.0 && gamma_ref < 1.0)) throw DomainError("gamma_ref must lie in (0, 1)");
    if (!(gamma > 0.0) || !(duration > 0.0)) throw DomainError("gamma and duration must be positive");
    const double exposure = exposure_from_probability(gamma_ref);
    const double slack = gamma * duration - 2.0 * exposure;
    if (!(slack > 0.0))
        throw UnsolvableError("no Rabi frequency reproduces the anchor: gamma*T <= 2*(-ln(1-gamma_ref))");
    if (delta_ref_ghz == 0.0)
        throw UnsolvableError("anchor at zero detuning does not constrain the Rabi frequency");
    const double delta = units::angular_mhz_from_ghz(delta_ref_ghz);
    return std::abs(delta) * std::sqrt(2.0 * exposure / slack);
}

}  // namespace nvmux::crosstalk
