#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nvmux/crosstalk.hpp"
#include "nvmux/qubit.hpp"
#include "nvmux/ramsey.hpp"

namespace nvmux::spin {

// Time affine in the swept sequence variable: tau_scale * tau + offset_ns.
struct TimeExpr {
    double tau_scale = 0.0;
    double offset_ns = 0.0;

    double at(double tau_ns) const { return tau_scale * tau_ns + offset_ns; }
    static TimeExpr constant(double ns) { return {0.0, ns}; }
    static TimeExpr tau(double scale = 1.0) { return {scale, 0.0}; }
};

// Microwave gate. A fixed `angle_rad` is instantaneous; otherwise the gate is a
// resonant drive at `rabi_mhz` lasting `drive_duration`, angle 2 pi f t.
struct RotationEvent {
    Axis axis = Axis::X;
    std::optional<double> angle_rad;
    double rabi_mhz = 0.0;
    TimeExpr drive_duration{};
};

struct PrecessEvent {
    TimeExpr duration{};
};

// Resonant readout laser aimed at `target` (the owning emitter when empty).
// Every other emitter in the cluster receives a crosstalk channel at the pulse
// midpoint. Spectator ground populations default to m_s=0.
struct LaserEvent {
    std::string target;
    std::optional<double> frequency_ghz;  // default: target's readout line
    double duration_us = crosstalk::default_msr_duration_us;
    std::map<int, double> spectator_populations{{0, 1.0}};
};

struct ReadoutEvent {};

struct GateEvent {
    TimeExpr start{};
    std::variant<RotationEvent, PrecessEvent, LaserEvent, ReadoutEvent> action;
};

struct ClusterSequenceSpec {
    std::vector<double> tau_grid_ns;
    std::map<std::string, std::vector<GateEvent>> timelines;
};

struct ClusterEmitter {
    crosstalk::EmitterOpticalModel optics;
    double mw_detuning_mhz = 0.0;
    std::optional<double> t2_star_ns = default_t2_star_ns;
    ReadoutModel readout{};
};

// Simulates every emitter's timeline for each tau. Each emitter is observed at
// its first readout event, or else at the first laser aimed at it. Contrast
// comes from a second pass in which the last rotation before the observation
// is advanced by pi (pi/2 -> 3pi/2).
//
// Throws DomainError for unknown emitter references, overlapping intervals on
// one timeline, or an emitter without an observation point.
std::map<std::string, SequenceResult> run_cluster_sequence(const std::vector<ClusterEmitter>& cluster,
                                                           const ClusterSequenceSpec& spec);

// Copy of `spec` with every laser replaced by a readout of its target at the
// same start time: the crosstalk-free reference run.
ClusterSequenceSpec without_lasers(const ClusterSequenceSpec& spec);

// JSON ingestion. Sequence document:
//   {"tau_grid_ns": [...], "timelines": {"<label>": [event, ...]}}
// with events {"t_ns": T, "kind": "rotation"|"precess"|"laser"|"readout", ...}
// and times T either a number (ns), "tau", or {"tau": a, "ns": b}.
ClusterSequenceSpec sequence_from_json(const nlohmann::json& doc);
// {"emitters": [{"model": {...}, "mw_detuning_mhz": f, "t2_star_ns": f|null,
//                "readout": {"bright": f, "dark": f}}]}
std::vector<ClusterEmitter> cluster_from_json(const nlohmann::json& doc);

}  // namespace nvmux::spin
