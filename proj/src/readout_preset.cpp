#include <cmath>

#include "nvmux/errors.hpp"
#include "nvmux/units.hpp"
#include "nvmux/yield.hpp"

namespace nvmux::yield {

void ReadoutPreset::validate() const {
    if (!(duration_us > 0.0)) throw DomainError("preset '" + name + "': duration must be positive");
    if (!(gamma > 0.0)) throw DomainError("preset '" + name + "': gamma must be positive");
    if (!(omega >= 0.0) || !std::isfinite(omega)) throw DomainError("preset '" + name + "': omega must be >= 0");
}

double ReadoutPreset::crosstalk_at(double offset_ghz) const {
    return crosstalk::transition_crosstalk(omega, units::angular_mhz_from_ghz(offset_ghz), gamma, duration_us);
}

ReadoutPreset msr_preset(double gamma, double duration_us, double anchor_delta_ghz, double anchor_gamma) {
    ReadoutPreset p;
    p.name = "msr";
    p.gamma = gamma;
    p.duration_us = duration_us;
    p.omega = crosstalk::calibrate_rabi(anchor_delta_ghz, anchor_gamma, gamma, duration_us);
    p.calibrated = true;
    p.calibration_delta_ghz = anchor_delta_ghz;
    p.calibration_gamma = anchor_gamma;
    return p;
}

ReadoutPreset ssr_preset(double gamma) {
    ReadoutPreset p;
    p.name = "ssr";
    p.gamma = gamma;
    p.omega = gamma;
    p.duration_us = 3.7;
    return p;
}

ReadoutPreset preset_by_name(const std::string& name) {
    if (name == "msr") return msr_preset();
    if (name == "ssr") return ssr_preset();
    throw DomainError("unknown readout preset '" + name + "' (expected 'msr' or 'ssr')");
}

ReadoutPreset preset_from_json(const nlohmann::json& doc) {
    try {
        if (!doc.is_object()) throw ParseError("preset must be a JSON object");
        const std::string name = doc.value("name", std::string("custom"));
        const bool has_params = doc.contains("omega_mhz") || doc.contains("gamma_mhz") || doc.contains("duration_us");
        if (!has_params) return preset_by_name(name);

        const double gamma = doc.value("gamma_mhz", crosstalk::default_decay_rate);
        const double duration = doc.value("duration_us", crosstalk::default_msr_duration_us);
        ReadoutPreset p;
        const auto& omega = doc.contains("omega_mhz") ? doc.at("omega_mhz") : nlohmann::json("calibrated");
        if (omega.is_string()) {
            if (omega.get<std::string>() != "calibrated") throw ParseError("omega_mhz must be a number or \"calibrated\"");
            const auto cal = doc.value("calibration", nlohmann::json::object());
            p = msr_preset(gamma, duration, cal.value("delta_ghz", 16.0), cal.value("gamma_ref", 0.01));
        } else {
            p.omega = omega.get<double>();
            p.gamma = gamma;
            p.duration_us = duration;
        }
        p.name = name;
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("preset document: ") + e.what());
    }
}

nlohmann::json to_json(const ReadoutPreset& p) {
    nlohmann::json doc = {{"name", p.name}, {"omega_mhz", p.omega}, {"gamma_mhz", p.gamma}, {"duration_us", p.duration_us}};
    if (p.calibrated) doc["calibration"] = {{"delta_ghz", p.calibration_delta_ghz}, {"gamma_ref", p.calibration_gamma}};
    return doc;
}

}  // namespace nvmux::yield
