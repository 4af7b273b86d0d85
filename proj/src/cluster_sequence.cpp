#include "nvmux/cluster_sequence.hpp"

#include <algorithm>
#include <numbers>
#include <set>

#include "nvmux/errors.hpp"
#include "nvmux/optical_model_io.hpp"
#include "nvmux/units.hpp"

namespace nvmux::spin {

namespace {

// Allowed rounding slack when checking that intervals do not overlap, ns.
constexpr double overlap_slack_ns = 1e-9;

struct Resolved {
    double start = 0.0;
    double end = 0.0;
    const GateEvent* event = nullptr;
};

struct LaserPoint {
    std::string target;
    double start = 0.0;
    double midpoint = 0.0;
    crosstalk::ReadoutPulse pulse;
    const std::map<int, double>* populations = nullptr;
};

const std::string& laser_target(const LaserEvent& laser, const std::string& owner) {
    return laser.target.empty() ? owner : laser.target;
}

double event_duration(const GateEvent& ev, double tau) {
    return std::visit(
        [&](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, RotationEvent>)
                return a.angle_rad ? 0.0 : a.drive_duration.at(tau);
            else if constexpr (std::is_same_v<T, PrecessEvent>)
                return a.duration.at(tau);
            else if constexpr (std::is_same_v<T, LaserEvent>)
                return a.duration_us * 1e3;
            else
                return 0.0;
        },
        ev.action);
}

std::vector<Resolved> resolve_timeline(const std::string& label, const std::vector<GateEvent>& events, double tau) {
    std::vector<Resolved> out;
    out.reserve(events.size());
    for (const auto& ev : events) {
        const double start = ev.start.at(tau);
        const double dur = event_duration(ev, tau);
        if (!(dur >= 0.0)) throw DomainError("negative event duration on timeline '" + label + "'");
        out.push_back({start, start + dur, &ev});
    }
    std::stable_sort(out.begin(), out.end(), [](const Resolved& a, const Resolved& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].start < out[i - 1].end - overlap_slack_ns)
            throw DomainError("overlapping events on timeline '" + label + "'");
    return out;
}

double rotation_angle(const RotationEvent& r, double tau) {
    return r.angle_rad ? *r.angle_rad : units::phase_rad(r.rabi_mhz, r.drive_duration.at(tau));
}

struct Observation {
    double f = 0.0;
    double p1 = 0.0;
};

// One pass over an emitter's timeline. `flip_last_rotation` adds pi to the
// final rotation before the observation point.
Observation simulate_emitter(const ClusterEmitter& emitter,
                             const std::vector<Resolved>& timeline, std::optional<std::size_t> readout_index,
                             double observe_at, const std::vector<LaserPoint>& foreign, double tau,
                             bool flip_last_rotation) {
    const std::size_t stop = readout_index.value_or(timeline.size());
    std::optional<std::size_t> last_rotation;
    for (std::size_t i = 0; i < stop; ++i) {
        if (!readout_index && timeline[i].start >= observe_at) break;
        if (std::holds_alternative<RotationEvent>(timeline[i].event->action)) last_rotation = i;
    }
    const double stop_time = readout_index ? timeline[*readout_index].start : observe_at;

    QubitState state;
    double elapsed = 0.0;
    std::size_t next_laser = 0;
    auto hit = [&](const LaserPoint& lp) {
        const auto b = crosstalk::emitter_crosstalk(emitter.optics, lp.pulse, *lp.populations);
        state = apply_crosstalk_channel(state, b);
    };

    for (std::size_t i = 0; i < stop; ++i) {
        const Resolved& r = timeline[i];
        if (!readout_index && r.start >= observe_at) break;
        while (next_laser < foreign.size() && foreign[next_laser].midpoint < r.start) hit(foreign[next_laser++]);

        if (const auto* rot = std::get_if<RotationEvent>(&r.event->action)) {
            double angle = rotation_angle(*rot, tau);
            if (flip_last_rotation && last_rotation == i) angle += std::numbers::pi;
            state = apply_rotation(state, rot->axis, angle);
            elapsed = 0.0;
        } else if (std::holds_alternative<PrecessEvent>(r.event->action)) {
            double t = r.start;
            while (next_laser < foreign.size() && foreign[next_laser].midpoint < r.end) {
                const double m = foreign[next_laser].midpoint;
                state = free_precession(state, emitter.mw_detuning_mhz, m - t, emitter.t2_star_ns, elapsed);
                elapsed += m - t;
                t = m;
                hit(foreign[next_laser++]);
            }
            state = free_precession(state, emitter.mw_detuning_mhz, r.end - t, emitter.t2_star_ns, elapsed);
            elapsed += r.end - t;
        }
    }
    while (next_laser < foreign.size() && foreign[next_laser].midpoint < stop_time) hit(foreign[next_laser++]);
    return {emitter.readout.fluorescence(state), state.population(1)};
}

}  // namespace

std::map<std::string, SequenceResult> run_cluster_sequence(const std::vector<ClusterEmitter>& cluster,
                                                           const ClusterSequenceSpec& spec) {
    std::map<std::string, const ClusterEmitter*> by_label;
    for (const auto& e : cluster) {
        e.optics.validate();
        if (!by_label.emplace(e.optics.label, &e).second)
            throw DomainError("duplicate emitter label '" + e.optics.label + "'");
    }
    for (const auto& [label, events] : spec.timelines) {
        if (!by_label.count(label)) throw DomainError("timeline references unknown emitter '" + label + "'");
        for (const auto& ev : events)
            if (const auto* laser = std::get_if<LaserEvent>(&ev.action))
                if (!by_label.count(laser_target(*laser, label)))
                    throw DomainError("laser targets unknown emitter '" + laser->target + "'");
    }
    for (std::size_t i = 0; i < spec.tau_grid_ns.size(); ++i)
        if (!(spec.tau_grid_ns[i] >= 0.0)) throw DomainError("tau grid must be non-negative");

    std::map<std::string, SequenceResult> results;
    for (double tau : spec.tau_grid_ns) {
        std::map<std::string, std::vector<Resolved>> timelines;
        std::vector<LaserPoint> lasers;
        for (const auto& [label, events] : spec.timelines) {
            auto& tl = timelines[label] = resolve_timeline(label, events, tau);
            for (const auto& r : tl) {
                if (const auto* laser = std::get_if<LaserEvent>(&r.event->action)) {
                    const std::string& target = laser_target(*laser, label);
                    const auto& optics = by_label.at(target)->optics;
                    const double freq = laser->frequency_ghz.value_or(optics.readout_transition().frequency_ghz);
                    lasers.push_back({target, r.start, 0.5 * (r.start + r.end), {freq, laser->duration_us},
                                      &laser->spectator_populations});
                }
            }
        }
        std::stable_sort(lasers.begin(), lasers.end(),
                         [](const LaserPoint& a, const LaserPoint& b) { return a.midpoint < b.midpoint; });

        for (const auto& [label, tl] : timelines) {
            const ClusterEmitter& emitter = *by_label.at(label);
            std::optional<std::size_t> readout_index;
            for (std::size_t i = 0; i < tl.size() && !readout_index; ++i)
                if (std::holds_alternative<ReadoutEvent>(tl[i].event->action)) readout_index = i;
            double observe_at = 0.0;
            if (!readout_index) {
                auto it = std::min_element(lasers.begin(), lasers.end(), [&](const LaserPoint& a, const LaserPoint& b) {
                    const bool ta = a.target == label;
                    const bool tb = b.target == label;
                    if (ta != tb) return ta;
                    return a.start < b.start;
                });
                if (it == lasers.end() || it->target != label)
                    throw DomainError("emitter '" + label + "' has no readout event and no laser aimed at it");
                observe_at = it->start;
            }
            std::vector<LaserPoint> foreign;
            for (const auto& lp : lasers)
                if (lp.target != label) foreign.push_back(lp);

            const auto plain = simulate_emitter(emitter, tl, readout_index, observe_at, foreign, tau, false);
            const auto flipped = simulate_emitter(emitter, tl, readout_index, observe_at, foreign, tau, true);
            auto& res = results[label];
            res.tau_ns.push_back(tau);
            res.f_pi2.push_back(plain.f);
            res.f_3pi2.push_back(flipped.f);
            res.contrast.push_back(contrast(plain.f, flipped.f));
            res.population_1.push_back(plain.p1);
        }
    }
    return results;
}

ClusterSequenceSpec without_lasers(const ClusterSequenceSpec& spec) {
    // Each laser becomes a crosstalk-free readout of its target so observation
    // points are unchanged.
    ClusterSequenceSpec out = spec;
    std::vector<std::pair<std::string, TimeExpr>> readouts;
    for (auto& [label, events] : out.timelines) {
        for (const auto& ev : events)
            if (const auto* laser = std::get_if<LaserEvent>(&ev.action))
                readouts.emplace_back(laser_target(*laser, label), ev.start);
        std::erase_if(events, [](const GateEvent& ev) { return std::holds_alternative<LaserEvent>(ev.action); });
    }
    for (const auto& [target, start] : readouts) out.timelines[target].push_back({start, ReadoutEvent{}});
    return out;
}

namespace {

TimeExpr time_from_json(const nlohmann::json& v, const char* what) {
    if (v.is_number()) return TimeExpr::constant(v.get<double>());
    if (v.is_string() && v.get<std::string>() == "tau") return TimeExpr::tau();
    if (v.is_object()) {
        TimeExpr t;
        t.tau_scale = v.value("tau", 0.0);
        t.offset_ns = v.value("ns", 0.0);
        return t;
    }
    throw ParseError(std::string("field '") + what + "' must be a number, \"tau\" or {\"tau\": a, \"ns\": b}");
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'");
    return *it;
}

GateEvent event_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("events must be JSON objects");
    GateEvent ev;
    ev.start = time_from_json(require(j, "t_ns"), "t_ns");
    const auto kind = require(j, "kind").get<std::string>();
    if (kind == "rotation") {
        RotationEvent r;
        r.axis = axis_from_string(j.value("axis", std::string("x")));
        if (j.contains("angle_rad")) {
            r.angle_rad = j.at("angle_rad").get<double>();
        } else {
            r.rabi_mhz = require(j, "rabi_mhz").get<double>();
            r.drive_duration = time_from_json(require(j, "duration_ns"), "duration_ns");
        }
        ev.action = r;
    } else if (kind == "precess") {
        ev.action = PrecessEvent{time_from_json(require(j, "duration_ns"), "duration_ns")};
    } else if (kind == "laser") {
        LaserEvent l;
        l.target = j.value("target", std::string{});
        if (j.contains("frequency_ghz")) l.frequency_ghz = j.at("frequency_ghz").get<double>();
        l.duration_us = j.value("duration_us", crosstalk::default_msr_duration_us);
        if (j.contains("spectator_populations")) {
            l.spectator_populations.clear();
            for (const auto& [key, p] : j.at("spectator_populations").items()) {
                std::size_t used = 0;
                int level = 0;
                try {
                    level = std::stoi(key, &used);
                } catch (const std::exception&) {
                }
                if (used == 0 || used != key.size()) throw ParseError("population key '" + key + "' is not an integer");
                l.spectator_populations[level] = p.get<double>();
            }
        }
        ev.action = l;
    } else if (kind == "readout") {
        ev.action = ReadoutEvent{};
    } else {
        throw ParseError("unknown event kind '" + kind + "'");
    }
    return ev;
}

}  // namespace

ClusterSequenceSpec sequence_from_json(const nlohmann::json& doc) {
    try {
        ClusterSequenceSpec spec;
        spec.tau_grid_ns = require(doc, "tau_grid_ns").get<std::vector<double>>();
        for (const auto& [label, events] : require(doc, "timelines").items()) {
            auto& tl = spec.timelines[label];
            for (const auto& e : events) tl.push_back(event_from_json(e));
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("sequence document: ") + e.what());
    }
}

std::vector<ClusterEmitter> cluster_from_json(const nlohmann::json& doc) {
    try {
        std::vector<ClusterEmitter> out;
        for (const auto& e : require(doc, "emitters")) {
            ClusterEmitter ce;
            ce.optics = crosstalk::emitter_from_json(require(e, "model"));
            ce.mw_detuning_mhz = e.value("mw_detuning_mhz", 0.0);
            if (e.contains("t2_star_ns")) {
                const auto& t2 = e.at("t2_star_ns");
                ce.t2_star_ns = t2.is_null() ? std::nullopt : std::optional<double>(t2.get<double>());
            }
            if (e.contains("readout")) {
                ce.readout.bright = e.at("readout").value("bright", ce.readout.bright);
                ce.readout.dark = e.at("readout").value("dark", ce.readout.dark);
            }
            out.push_back(std::move(ce));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("cluster document: ") + e.what());
    }
}

}  // namespace nvmux::spin
