#pragma once

// Shared three-emitter protocol: Ramsey on A and B while C is driven for tau
// and then read out with its own laser line.

#include <numbers>
#include <string>
#include <vector>

#include "nvmux/cluster_sequence.hpp"

namespace sequences {

using namespace nvmux;
using namespace nvmux::spin;

inline constexpr double zpl = 470400.0;

inline ClusterEmitter emitter(const std::string& label, double freq_ghz, double omega, double mw_mhz) {
    crosstalk::OpticalTransition t;
    t.ground_initial = 0;
    t.excited = crosstalk::ExcitedState::Ex;
    t.frequency_ghz = freq_ghz;
    t.rabi = omega;
    t.branching = {{0, crosstalk::default_decay_rate}};
    ClusterEmitter e;
    e.optics = {label, {t}};
    e.mw_detuning_mhz = mw_mhz;
    return e;
}

inline std::vector<GateEvent> ramsey_timeline() {
    return {{TimeExpr::tau(), RotationEvent{Axis::X, std::numbers::pi / 2}},
            {TimeExpr::tau(), PrecessEvent{TimeExpr::tau()}},
            {TimeExpr::tau(2.0), RotationEvent{Axis::X, std::numbers::pi / 2}},
            {TimeExpr::tau(2.0), ReadoutEvent{}}};
}

inline std::vector<GateEvent> rabi_then_readout(double rabi_mhz) {
    RotationEvent drive{Axis::X, std::nullopt, rabi_mhz, TimeExpr::tau()};
    return {{TimeExpr::constant(0.0), drive}, {TimeExpr::tau(), LaserEvent{}}};
}

inline ClusterSequenceSpec three_emitter_sequence(std::vector<double> taus) {
    ClusterSequenceSpec spec;
    spec.tau_grid_ns = std::move(taus);
    spec.timelines["A"] = ramsey_timeline();
    spec.timelines["B"] = ramsey_timeline();
    spec.timelines["C"] = rabi_then_readout(1.7);
    return spec;
}

inline std::vector<double> taus() {
    std::vector<double> t;
    for (int i = 0; i < 40; ++i) t.push_back(400.0 + 40.0 * i);
    return t;
}

}  // namespace sequences
