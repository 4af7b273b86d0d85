#include "nvmux/optical_model_io.hpp"

#include <string>

#include "nvmux/errors.hpp"

namespace nvmux::crosstalk {

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'");
    return *it;
}

double require_number(const nlohmann::json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

EmitterOpticalModel emitter_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("emitter model must be a JSON object");
    EmitterOpticalModel m;
    const auto& label = require(doc, "label");
    if (!label.is_string()) throw ParseError("field 'label' must be a string");
    m.label = label.get<std::string>();
    const auto& transitions = require(doc, "transitions");
    if (!transitions.is_array()) throw ParseError("field 'transitions' must be an array");
    for (const auto& t : transitions) {
        if (!t.is_object()) throw ParseError("transition entries must be objects");
        OpticalTransition tr;
        const auto& ground = require(t, "ground");
        if (!ground.is_number_integer()) throw ParseError("field 'ground' must be an integer");
        tr.ground_initial = ground.get<int>();
        const auto& excited = require(t, "excited");
        if (!excited.is_string()) throw ParseError("field 'excited' must be a string");
        tr.excited = excited_state_from_string(excited.get<std::string>());
        tr.frequency_ghz = require_number(t, "frequency_ghz");
        tr.rabi = require_number(t, "rabi_mhz");
        const auto& branching = require(t, "branching_mhz");
        if (!branching.is_object()) throw ParseError("field 'branching_mhz' must be an object");
        for (const auto& [key, rate] : branching.items()) {
            int j = 0;
            try {
                std::size_t used = 0;
                j = std::stoi(key, &used);
                if (used != key.size()) throw std::invalid_argument(key);
            } catch (const std::exception&) {
                throw ParseError("branching key '" + key + "' is not an integer");
            }
            if (!rate.is_number()) throw ParseError("branching rates must be numbers");
            tr.branching[j] = rate.get<double>();
        }
        m.transitions.push_back(std::move(tr));
    }
    m.validate();
    return m;
}

nlohmann::json to_json(const EmitterOpticalModel& model) {
    nlohmann::json transitions = nlohmann::json::array();
    for (const auto& t : model.transitions) {
        nlohmann::json branching = nlohmann::json::object();
        for (const auto& [j, rate] : t.branching) branching[std::to_string(j)] = rate;
        transitions.push_back({{"ground", t.ground_initial},
                               {"excited", std::string(to_string(t.excited))},
                               {"frequency_ghz", t.frequency_ghz},
                               {"rabi_mhz", t.rabi},
                               {"branching_mhz", branching}});
    }
    return {{"label", model.label}, {"transitions", transitions}};
}

}  // namespace nvmux::crosstalk
