#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvmux/crosstalk.hpp"
#include "nvmux/ensemble.hpp"

namespace nvmux::yield {

// Resonant-readout parameters used to judge spectator crosstalk.
struct ReadoutPreset {
    std::string name;
    double omega = 0.0;        // rad/us
    double gamma = 0.0;        // rad/us
    double duration_us = 0.0;
    // Set when omega came from calibrate_rabi against (delta_ghz, gamma_ref).
    bool calibrated = false;
    double calibration_delta_ghz = 0.0;
    double calibration_gamma = 0.0;

    void validate() const;
    // Spectator crosstalk at a frequency offset (GHz) from the addressed line.
    double crosstalk_at(double offset_ghz) const;
};

// Multi-shot readout: omega calibrated so that 16 GHz detuning gives 1 %
// crosstalk. The decay rate and pulse length are assumed defaults.
ReadoutPreset msr_preset(double gamma = crosstalk::default_decay_rate,
                         double duration_us = crosstalk::default_msr_duration_us, double anchor_delta_ghz = 16.0,
                         double anchor_gamma = 0.01);
// Single-shot readout: omega = gamma, T = 3.7 us.
ReadoutPreset ssr_preset(double gamma = crosstalk::default_decay_rate);
ReadoutPreset preset_by_name(const std::string& name);

// {"name": s, "omega_mhz": f | "calibrated", "gamma_mhz": f, "duration_us": f,
//  "calibration": {"delta_ghz": f, "gamma_ref": f}}; "name" may be "msr" or
// "ssr" alone to pick a built-in preset.
ReadoutPreset preset_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ReadoutPreset& preset);

enum class ViabilityMode {
    WorstCase,   // every emitter can be read without disturbing any other
    Permissive,  // some readout order exists in which no unread emitter is disturbed
};

struct Viability {
    bool viable = true;
    double worst_crosstalk = 0.0;  // max over (addressed, spectator) pairs
};

// Laser parked on each emitter's line in turn; spectators see the preset's
// single-line crosstalk at their frequency offset. Spectators are taken to
// sit in m_s=0 with the Ex-type line dominating.
Viability cluster_viability(std::span<const double> frequencies_ghz, const ReadoutPreset& preset,
                            double gamma_threshold, ViabilityMode mode = ViabilityMode::WorstCase);

// Full-breakdown variant: each emitter is read on its readout_transition() for
// preset.duration_us and spectators see emitter_crosstalk() with ground
// population in m_s=0.
Viability cluster_viability(std::span<const crosstalk::EmitterOpticalModel> emitters, const ReadoutPreset& preset,
                            double gamma_threshold, ViabilityMode mode = ViabilityMode::WorstCase);

struct YieldEstimate {
    std::size_t n_emitters = 0;
    double gamma_threshold = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    double yield = 0.0;
    double ci_lo = 0.0;  // Wilson 95 %
    double ci_hi = 0.0;
};

YieldEstimate make_estimate(std::size_t n, double threshold, std::uint64_t trials, std::uint64_t successes);

struct YieldOptions {
    ViabilityMode mode = ViabilityMode::WorstCase;
    unsigned threads = 1;  // results are identical for any value
};

// Trial t draws its cluster from substream t of `seed`.
YieldEstimate estimate_yield(const ensemble::KernelDensityModel& model, std::size_t n, const ReadoutPreset& preset,
                             double gamma_threshold, std::uint64_t trials, std::uint64_t seed,
                             const YieldOptions& options = {});

// One estimate per (n, threshold), n-major. Every cell of a trial reuses the
// same draws (size-n clusters are prefixes of the largest), so the table is
// exactly monotone in n and threshold.
std::vector<YieldEstimate> yield_sweep(const ensemble::KernelDensityModel& model, std::span<const std::size_t> n_values,
                                       std::span<const double> thresholds, const ReadoutPreset& preset,
                                       std::uint64_t trials, std::uint64_t seed, const YieldOptions& options = {});

// "n,threshold,trials,successes,yield,ci_lo,ci_hi"
void write_sweep_csv(std::ostream& os, std::span<const YieldEstimate> table);
nlohmann::json to_json(std::span<const YieldEstimate> table);

}  // namespace nvmux::yield
