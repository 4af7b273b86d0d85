// nvmux command-line front end.
//
// Every subcommand resolves its configuration as defaults <- JSON config file
// <- flags, writes its outputs into the output directory and embeds a metadata
// block (tool version, command, seed, resolved config) in each file. Exit
// codes: 0 success, 1 runtime failure, 2 input error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nvmux/cluster_sequence.hpp"
#include "nvmux/crosstalk.hpp"
#include "nvmux/ensemble.hpp"
#include "nvmux/errors.hpp"
#include "nvmux/fit_io.hpp"
#include "nvmux/format.hpp"
#include "nvmux/optical_model_io.hpp"
#include "nvmux/ramsey.hpp"
#include "nvmux/units.hpp"
#include "nvmux/yield.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace nvmux;

namespace {

constexpr std::uint64_t default_seed = 1729;
constexpr const char* output_dir_env = "NVMUX_OUTPUT_DIR";

// Spectator line used by the single-emitter commands. Only offsets matter.
constexpr double reference_zpl_ghz = 470400.0;

// Config file or flag problem: exit code 2.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
};

// ---------------------------------------------------------------- config

json read_json_file(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open '" + path.string() + "'");
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

// Defaults, overlaid by the config file, overlaid by explicit flags. Unknown
// config keys are rejected so typos do not pass silently.
json resolve(json defaults, const Globals& g, const json& flags) {
    if (!g.config_path.empty()) {
        const json file = read_json_file(g.config_path);
        if (!file.is_object()) throw InputError("config '" + g.config_path + "' must hold a JSON object");
        for (const auto& [key, value] : file.items()) {
            if (!defaults.contains(key))
                throw InputError("config '" + g.config_path + "': unknown key '" + key + "'");
            defaults[key] = value;
        }
    }
    for (const auto& [key, value] : flags.items()) defaults[key] = value;
    return defaults;
}

// Relative paths in a config file are taken relative to that file; flag paths
// relative to the working directory.
fs::path input_path(const json& cfg, const char* key, const Globals& g, const json& flags) {
    const auto& v = cfg.at(key);
    if (!v.is_string() || v.get<std::string>().empty()) throw InputError(std::string("'") + key + "' must name a file");
    fs::path p = v.get<std::string>();
    if (p.is_relative() && !flags.contains(key) && !g.config_path.empty())
        p = fs::path(g.config_path).parent_path() / p;
    if (!fs::exists(p)) throw InputError(std::string("'") + key + "': file '" + p.string() + "' does not exist");
    return p;
}

double number(const json& cfg, const char* key) {
    const auto& v = cfg.at(key);
    if (!v.is_number()) throw InputError(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

std::uint64_t count(const json& cfg, const char* key, std::uint64_t min = 1) {
    const auto& v = cfg.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(min))
        throw InputError(std::string("'") + key + "' must be an integer >= " + std::to_string(min));
    return v.get<std::uint64_t>();
}

std::string text(const json& cfg, const char* key) {
    const auto& v = cfg.at(key);
    if (!v.is_string()) throw InputError(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& cfg, const char* key) {
    const auto& v = cfg.at(key);
    if (!v.is_array() || v.empty()) throw InputError(std::string("'") + key + "' must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw InputError(std::string("'") + key + "' must be a non-empty array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<double> linspace(double lo, double hi, std::uint64_t points, const char* what) {
    if (points < 2 || !(hi > lo)) throw InputError(std::string(what) + ": need max > min and at least 2 points");
    std::vector<double> g;
    for (std::uint64_t i = 0; i < points; ++i)
        g.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
    return g;
}

std::vector<double> tau_grid(const json& cfg) {
    const double lo = number(cfg, "tau_min_ns");
    const double hi = number(cfg, "tau_max_ns");
    const double step = number(cfg, "tau_step_ns");
    if (!(lo >= 0.0) || !(hi >= lo) || !(step > 0.0)) throw InputError("tau grid: need 0 <= tau_min_ns <= tau_max_ns, tau_step_ns > 0");
    std::vector<double> g;
    const auto n = static_cast<std::uint64_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::uint64_t i = 0; i <= n; ++i) g.push_back(lo + step * static_cast<double>(i));
    return g;
}

yield::ReadoutPreset preset(const json& cfg) {
    const auto& v = cfg.at("preset");
    if (v.is_string()) return yield::preset_by_name(v.get<std::string>());
    return yield::preset_from_json(v);
}

fitting::Weighting fit_weighting(const json& cfg) {
    const auto w = text(cfg, "weighting");
    if (w == "unweighted") return fitting::Weighting::Unweighted;
    if (w == "poisson") return fitting::Weighting::Poisson;
    if (w == "poisson-model") return fitting::Weighting::PoissonModel;
    throw InputError("'weighting' must be 'unweighted', 'poisson' or 'poisson-model'");
}

// ---------------------------------------------------------------- output

class Output {
public:
    Output(std::string command, const Globals& g, std::uint64_t seed, json config)
        : command_(std::move(command)), seed_(seed), config_(std::move(config)), verbose_(g.verbose) {
        if (!g.out_dir.empty()) {
            dir_ = g.out_dir;
        } else if (const char* env = std::getenv(output_dir_env); env && *env) {
            dir_ = env;
        } else {
            dir_ = ".";
        }
    }

    void derive(const std::string& key, json value) { derived_[key] = std::move(value); }

    json metadata() const {
        json m = {{"tool", "nvmux"}, {"version", NVMUX_VERSION}, {"command", command_}, {"seed", seed_},
                  {"config", config_}};
        if (!derived_.empty()) m["derived"] = derived_;
        return m;
    }

    // CSV: '#' metadata lines, then the body. Every loader skips '#' lines.
    void csv(const std::string& name, const std::string& body, const json& extra = json::object()) {
        std::ostringstream os;
        os << "# nvmux " << NVMUX_VERSION << '\n' << "# command: " << command_ << '\n' << "# seed: " << seed_ << '\n';
        os << "# config: " << config_.dump() << '\n';
        if (!derived_.empty()) os << "# derived: " << derived_.dump() << '\n';
        if (!extra.empty()) os << "# file: " << extra.dump() << '\n';
        os << body;
        write(name, os.str());
    }

    void json_file(const std::string& name, json doc) {
        doc["metadata"] = metadata();
        write(name, doc.dump(2) + "\n");
    }

private:
    void write(const std::string& name, const std::string& content) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        const fs::path path = dir_ / name;
        std::ofstream os(path, std::ios::binary);
        if (!os || !(os << content) || !os.flush())
            throw std::runtime_error("cannot write '" + path.string() + "'");
        std::cout << path.string() << '\n';
        if (verbose_) std::cerr << "wrote " << content.size() << " bytes to " << path.string() << '\n';
    }

    std::string command_;
    std::uint64_t seed_;
    json config_;
    json derived_ = json::object();
    fs::path dir_;
    bool verbose_;
};

std::string sequence_csv(const spin::SequenceResult& r) {
    std::ostringstream os;
    spin::write_csv(os, r);
    return os.str();
}

crosstalk::EmitterOpticalModel spectator_line(const yield::ReadoutPreset& p) {
    crosstalk::EmitterOpticalModel m;
    m.label = "spectator";
    m.transitions.push_back({0, crosstalk::ExcitedState::Ex, reference_zpl_ghz, p.omega, {{0, p.gamma}}});
    return m;
}

// ---------------------------------------------------------------- commands

struct Command {
    CLI::App* app = nullptr;
    json flags = json::object();
};

// Registers an optional flag whose value, when given, overrides `key`.
template <typename T>
void flag(Command& c, const std::string& name, const std::string& key, const std::string& help) {
    c.app->add_option_function<T>(name, [&c, key](const T& v) { c.flags[key] = v; }, help);
}

void list_flag(Command& c, const std::string& name, const std::string& key, const std::string& help) {
    c.app->add_option_function<std::vector<double>>(name, [&c, key](const std::vector<double>& v) { c.flags[key] = v; },
                                                   help)
        ->delimiter(',');
}

json json_value_or_name(const std::string& s) {
    // preset flags accept a name or a path to a JSON document
    if (s == "msr" || s == "ssr") return s;
    return read_json_file(s);
}

int run_crosstalk(const Command& c, const Globals& g) {
    const json cfg = resolve({{"preset", "msr"},
                              {"detuning_min_ghz", -40.0},
                              {"detuning_max_ghz", 40.0},
                              {"points", 161},
                              {"target_gamma", 0.01}},
                             g, c.flags);
    const auto p = preset(cfg);
    p.validate();
    const auto grid = linspace(number(cfg, "detuning_min_ghz"), number(cfg, "detuning_max_ghz"), count(cfg, "points"),
                               "detuning grid");
    const double target = number(cfg, "target_gamma");
    if (!(target > 0.0 && target < 1.0)) throw InputError("'target_gamma' must lie in (0, 1)");

    Output out("crosstalk", g, g.seed.value_or(default_seed), cfg);
    out.derive("omega_mhz", p.omega);
    out.derive("gamma_mhz", p.gamma);
    out.derive("duration_us", p.duration_us);
    out.derive("safe_detuning_ghz", crosstalk::min_safe_detuning(p.omega, p.gamma, p.duration_us, target));
    std::ostringstream os;
    os << "detuning_ghz,gamma\n";
    for (double d : grid) os << fmt_double(d) << ',' << fmt_double(p.crosstalk_at(d)) << '\n';
    out.csv("crosstalk.csv", os.str());
    return 0;
}

int run_ramsey(const Command& c, const Globals& g) {
    const json cfg = resolve({{"preset", "msr"},
                              {"laser_detunings_ghz", {0.0, 4.0, 8.0, 12.0, 16.0, 24.0, 32.0}},
                              {"tau_min_ns", 0.0},
                              {"tau_max_ns", 2000.0},
                              {"tau_step_ns", 10.0},
                              {"mw_detuning_mhz", spin::default_ramsey_detuning_mhz},
                              {"t2_star_ns", spin::default_t2_star_ns},
                              {"readout_bright", 1.0},
                              {"readout_dark", 0.7}},
                             g, c.flags);
    const auto p = preset(cfg);
    p.validate();
    const auto taus = tau_grid(cfg);
    spin::RamseyOptions opt;
    opt.t2_star_ns = cfg.at("t2_star_ns").is_null() ? std::nullopt : std::optional<double>(number(cfg, "t2_star_ns"));
    opt.readout = {number(cfg, "readout_bright"), number(cfg, "readout_dark")};
    const double mw = number(cfg, "mw_detuning_mhz");
    const auto detunings = numbers(cfg, "laser_detunings_ghz");

    Output out("ramsey", g, g.seed.value_or(default_seed), cfg);
    out.derive("omega_mhz", p.omega);
    const auto ref = spin::ramsey_with_crosstalk(mw, taus, std::nullopt, opt);
    out.csv("ramsey_reference.csv", sequence_csv(ref), {{"laser", nullptr}});

    const auto line = spectator_line(p);
    std::ostringstream summary;
    summary << "laser_detuning_ghz,gamma,amplitude_ratio,file\n";
    for (std::size_t i = 0; i < detunings.size(); ++i) {
        const auto b = crosstalk::emitter_crosstalk(line, {reference_zpl_ghz + detunings[i], p.duration_us},
                                                    std::map<int, double>{{0, 1.0}});
        const auto run = spin::ramsey_with_crosstalk(mw, taus, b, opt);
        char name[32];
        std::snprintf(name, sizeof name, "ramsey_%02zu.csv", i);
        out.csv(name, sequence_csv(run), {{"laser_detuning_ghz", detunings[i]}, {"gamma", b.total}});
        summary << fmt_double(detunings[i]) << ',' << fmt_double(b.total) << ','
                << fmt_double(spin::fit_amplitude_ratio(run, ref)) << ',' << name << '\n';
    }
    out.csv("ramsey_summary.csv", summary.str());
    return 0;
}

int run_cluster(const Command& c, const Globals& g) {
    const json cfg = resolve({{"cluster", ""}, {"sequence", ""}}, g, c.flags);
    const auto cluster = spin::cluster_from_json(read_json_file(input_path(cfg, "cluster", g, c.flags)));
    const auto spec = spin::sequence_from_json(read_json_file(input_path(cfg, "sequence", g, c.flags)));

    const auto run = spin::run_cluster_sequence(cluster, spec);
    const auto ref = spin::run_cluster_sequence(cluster, spin::without_lasers(spec));
    Output out("cluster", g, g.seed.value_or(default_seed), cfg);
    std::ostringstream summary;
    summary << "label,amplitude_ratio,degradation\n";
    for (const auto& [label, result] : run) {
        out.csv("cluster_" + label + ".csv", sequence_csv(result), {{"emitter", label}, {"run", "with lasers"}});
        out.csv("cluster_" + label + "_reference.csv", sequence_csv(ref.at(label)),
                {{"emitter", label}, {"run", "lasers replaced by ideal readout"}});
        // A laser-free emitter with zero reference contrast has no fringe to compare.
        std::string ratio = "nan";
        std::string degradation = "nan";
        try {
            const double k = spin::fit_amplitude_ratio(result, ref.at(label));
            ratio = fmt_double(k);
            degradation = fmt_double(1.0 - k);
        } catch (const DomainError&) {
        }
        summary << label << ',' << ratio << ',' << degradation << '\n';
    }
    out.csv("cluster_summary.csv", summary.str());
    return 0;
}

json peaks_from_json(const json& v) {
    if (v.is_null()) return v;
    if (!v.is_array()) throw InputError("'init' must be null or an array of peaks");
    return v;
}

int run_fit_ple(const Command& c, const Globals& g) {
    const json cfg = resolve({{"input", ""}, {"n_peaks", 7}, {"weighting", "unweighted"}, {"init", nullptr}}, g, c.flags);
    const auto path = input_path(cfg, "input", g, c.flags);
    std::ifstream is(path);
    fitting::Spectrum spectrum;
    try {
        spectrum = fitting::read_spectrum_csv(is);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    fitting::LorentzianFitOptions opt;
    opt.weighting = fit_weighting(cfg);
    if (const auto init = peaks_from_json(cfg.at("init")); !init.is_null()) {
        std::vector<fitting::LorentzianPeak> peaks;
        for (const auto& p : init) {
            if (!p.is_object()) throw InputError("'init' entries must be objects");
            peaks.push_back({number(p, "center_ghz"), number(p, "fwhm_ghz"), number(p, "amplitude")});
        }
        opt.init = peaks;
    }
    const auto n = static_cast<int>(count(cfg, "n_peaks"));
    const auto fit = fitting::fit_lorentzian_sum(spectrum, n, opt);

    Output out("fit-ple", g, g.seed.value_or(default_seed), cfg);
    out.json_file("ple_fit.json", fitting::to_json(fit));
    std::ostringstream os;
    fitting::write_residual_csv(os, spectrum, fit);
    out.csv("ple_residuals.csv", os.str());
    return 0;
}

int run_localize(const Command& c, const Globals& g) {
    const json cfg = resolve({{"input", ""}, {"weighting", "unweighted"}}, g, c.flags);
    const auto path = input_path(cfg, "input", g, c.flags);
    std::ifstream is(path);
    fitting::PsfImage image;
    try {
        image = fitting::read_psf_image(is);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    fitting::PsfFitOptions opt;
    opt.weighting = fit_weighting(cfg);
    const auto result = fitting::fit_gaussian_psf(image, opt);

    Output out("localize", g, g.seed.value_or(default_seed), cfg);
    out.json_file("localize_fit.json", fitting::to_json(result));
    std::ostringstream os;
    fitting::write_residual_csv(os, image, result);
    out.csv("localize_residuals.csv", os.str());
    return 0;
}

// Dataset from a file or a seeded Gaussian surrogate.
ensemble::ZplDataset load_dataset(const json& cfg, const Globals& g, const json& flags, std::uint64_t seed) {
    const bool has_file = cfg.at("dataset").is_string() && !cfg.at("dataset").get<std::string>().empty();
    const bool has_surrogate = cfg.at("surrogate").is_string() && !cfg.at("surrogate").get<std::string>().empty();
    if (has_file == has_surrogate) throw InputError("give exactly one of 'dataset' (a ZPL CSV) or 'surrogate' (pcd|scd)");
    if (has_surrogate) return ensemble::gaussian_surrogate(ensemble::surrogate_by_name(text(cfg, "surrogate")), seed);
    const auto path = input_path(cfg, "dataset", g, flags);
    std::ifstream is(path);
    try {
        return ensemble::load_zpl_dataset(is);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

ensemble::KernelDensityModel build_kde(const json& cfg, const ensemble::ZplDataset& data) {
    std::optional<double> bw;
    if (!cfg.at("bandwidth_ghz").is_null()) bw = number(cfg, "bandwidth_ghz");
    const auto w = text(cfg, "site_weighting");
    if (w != "per-transition" && w != "per-site") throw InputError("'site_weighting' must be 'per-transition' or 'per-site'");
    return ensemble::kde_fit(data, bw, w == "per-site" ? ensemble::SiteWeighting::PerSite : ensemble::SiteWeighting::PerTransition);
}

const json dataset_defaults = {
    {"dataset", ""}, {"surrogate", ""}, {"bandwidth_ghz", nullptr}, {"site_weighting", "per-transition"}};

int run_yield(const Command& c, const Globals& g, unsigned threads) {
    json defaults = dataset_defaults;
    defaults.update({{"preset", "msr"},
                     {"n_values", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
                     {"thresholds", {1e-4, 1e-3, 1e-2, 1e-1}},
                     {"trials", 100000},
                     {"mode", "worst-case"}});
    const json cfg = resolve(defaults, g, c.flags);
    const std::uint64_t seed = g.seed.value_or(default_seed);
    const auto data = load_dataset(cfg, g, c.flags, seed);
    const auto model = build_kde(cfg, data);
    const auto p = preset(cfg);
    p.validate();

    std::vector<std::size_t> ns;
    for (double v : numbers(cfg, "n_values")) {
        if (!(v >= 1.0) || v != std::floor(v)) throw InputError("'n_values' must hold integers >= 1");
        ns.push_back(static_cast<std::size_t>(v));
    }
    const auto th = numbers(cfg, "thresholds");
    const auto mode_name = text(cfg, "mode");
    if (mode_name != "worst-case" && mode_name != "permissive") throw InputError("'mode' must be 'worst-case' or 'permissive'");
    yield::YieldOptions opt;
    opt.mode = mode_name == "permissive" ? yield::ViabilityMode::Permissive : yield::ViabilityMode::WorstCase;
    opt.threads = threads;
    const auto trials = count(cfg, "trials", 100);

    const auto table = yield::yield_sweep(model, ns, th, p, trials, seed, opt);

    Output out("yield", g, seed, cfg);
    out.derive("preset", yield::to_json(p));
    out.derive("bandwidth_ghz", model.bandwidth());
    out.derive("dataset_count", data.frequency_ghz.size());
    out.derive("safe_detuning_ghz_at_1e-2", crosstalk::min_safe_detuning(p.omega, p.gamma, p.duration_us, 0.01));
    std::ostringstream os;
    yield::write_sweep_csv(os, table);
    out.csv("yield.csv", os.str());
    out.json_file("yield.json", {{"table", yield::to_json(table)}});
    return 0;
}

int run_sample_dist(const Command& c, const Globals& g) {
    json defaults = dataset_defaults;
    defaults.update({{"n", 1000}, {"density_points", 401}});
    const json cfg = resolve(defaults, g, c.flags);
    const std::uint64_t seed = g.seed.value_or(default_seed);
    const auto data = load_dataset(cfg, g, c.flags, seed);
    const auto model = build_kde(cfg, data);
    const auto draws = ensemble::sample(model, seed, count(cfg, "n"));

    Output out("sample-dist", g, seed, cfg);
    const auto stats = ensemble::summary_stats(data);
    out.derive("dataset_mean_ghz", stats.mean_ghz);
    out.derive("dataset_std_ghz", stats.std_ghz);
    out.derive("dataset_count", stats.count);
    out.derive("bandwidth_ghz", model.bandwidth());

    std::ostringstream samples;
    ensemble::write_zpl_dataset(samples, ensemble::ZplDataset{draws, {}});
    out.csv("samples.csv", samples.str());
    std::ostringstream dataset;
    ensemble::write_zpl_dataset(dataset, data);
    out.csv("dataset.csv", dataset.str());
    const auto [lo, hi] = std::minmax_element(data.frequency_ghz.begin(), data.frequency_ghz.end());
    std::ostringstream density;
    ensemble::write_density_csv(density, model, *lo - 4.0 * model.bandwidth(), *hi + 4.0 * model.bandwidth(),
                                 count(cfg, "density_points", 2));
    out.csv("density.csv", density.str());
    out.json_file("kde.json", ensemble::to_json(model));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nvmux: crosstalk, spin-dynamics, fitting and register-yield toolkit for spectrally multiplexed emitters"};
    app.set_version_flag("--version", std::string("nvmux ") + NVMUX_VERSION);
    app.require_subcommand(1);

    Globals g;
    app.add_option("-c,--config", g.config_path, "JSON config file; flags override its keys")->check(CLI::ExistingFile);
    app.add_option("-o,--out", g.out_dir, std::string("Output directory (default: $") + output_dir_env + " or .)");
    app.add_option_function<std::uint64_t>("--seed", [&g](const std::uint64_t& s) { g.seed = s; },
                                           "RNG seed (default " + std::to_string(default_seed) + ")");
    app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");
    app.fallthrough();

    Command xt{app.add_subcommand("crosstalk", "Crosstalk probability versus laser detuning")};
    flag<std::string>(xt, "--preset", "preset", "msr, ssr, or a preset JSON file");
    flag<double>(xt, "--min", "detuning_min_ghz", "Lowest detuning (GHz)");
    flag<double>(xt, "--max", "detuning_max_ghz", "Highest detuning (GHz)");
    flag<std::uint64_t>(xt, "--points", "points", "Grid points");
    flag<double>(xt, "--target", "target_gamma", "Crosstalk target for the reported safe detuning");

    Command rm{app.add_subcommand("ramsey", "Ramsey fringes under a detuned readout laser")};
    flag<std::string>(rm, "--preset", "preset", "msr, ssr, or a preset JSON file");
    list_flag(rm, "--detunings", "laser_detunings_ghz", "Comma-separated laser detunings (GHz)");
    flag<double>(rm, "--tau-min", "tau_min_ns", "First free-precession time (ns)");
    flag<double>(rm, "--tau-max", "tau_max_ns", "Last free-precession time (ns)");
    flag<double>(rm, "--tau-step", "tau_step_ns", "Free-precession step (ns)");
    flag<double>(rm, "--mw-detuning", "mw_detuning_mhz", "Microwave detuning (MHz)");
    flag<double>(rm, "--t2-star", "t2_star_ns", "Gaussian dephasing time (ns)");

    Command cl{app.add_subcommand("cluster", "Multi-emitter pulse sequence with spectator crosstalk")};
    flag<std::string>(cl, "--cluster", "cluster", "Cluster JSON");
    flag<std::string>(cl, "--sequence", "sequence", "Sequence JSON");

    Command ple{app.add_subcommand("fit-ple", "Fit a sum of Lorentzians to a PLE spectrum")};
    flag<std::string>(ple, "-i,--input", "input", "Spectrum CSV (frequency_ghz,counts)");
    flag<std::int64_t>(ple, "-n,--peaks", "n_peaks", "Number of Lorentzians");
    flag<std::string>(ple, "--weighting", "weighting", "unweighted, poisson or poisson-model");

    Command loc{app.add_subcommand("localize", "Fit a Gaussian PSF to a resonant-scan image")};
    flag<std::string>(loc, "-i,--input", "input", "PSF image file");
    flag<std::string>(loc, "--weighting", "weighting", "unweighted, poisson or poisson-model");

    unsigned threads = 1;
    Command yl{app.add_subcommand("yield", "Monte Carlo register yield sweep")};
    flag<std::string>(yl, "--dataset", "dataset", "ZPL CSV (frequency_ghz[,site_id])");
    flag<std::string>(yl, "--surrogate", "surrogate", "Gaussian surrogate: pcd or scd");
    flag<double>(yl, "--bandwidth", "bandwidth_ghz", "KDE bandwidth (GHz); default Silverman");
    flag<std::string>(yl, "--site-weighting", "site_weighting", "per-transition or per-site");
    flag<std::string>(yl, "--preset", "preset", "msr, ssr, or a preset JSON file");
    list_flag(yl, "--n-values", "n_values", "Comma-separated cluster sizes");
    list_flag(yl, "--thresholds", "thresholds", "Comma-separated crosstalk thresholds");
    flag<std::int64_t>(yl, "--trials", "trials", "Monte Carlo trials per cell");
    flag<std::string>(yl, "--mode", "mode", "worst-case or permissive");
    yl.app->add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));

    Command sd{app.add_subcommand("sample-dist", "Kernel density estimate of a ZPL ensemble and seeded draws")};
    flag<std::string>(sd, "--dataset", "dataset", "ZPL CSV (frequency_ghz[,site_id])");
    flag<std::string>(sd, "--surrogate", "surrogate", "Gaussian surrogate: pcd or scd");
    flag<double>(sd, "--bandwidth", "bandwidth_ghz", "KDE bandwidth (GHz); default Silverman");
    flag<std::string>(sd, "--site-weighting", "site_weighting", "per-transition or per-site");
    flag<std::int64_t>(sd, "-n,--samples", "n", "Number of draws");
    flag<std::int64_t>(sd, "--density-points", "density_points", "Density grid points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    // A preset flag may name a JSON file; load it so the resolved config embeds
    // the document rather than a path.
    try {
        for (auto* c : {&xt, &rm, &yl})
            if (c->flags.contains("preset")) c->flags["preset"] = json_value_or_name(c->flags["preset"].get<std::string>());

        if (xt.app->parsed()) return run_crosstalk(xt, g);
        if (rm.app->parsed()) return run_ramsey(rm, g);
        if (cl.app->parsed()) return run_cluster(cl, g);
        if (ple.app->parsed()) return run_fit_ple(ple, g);
        if (loc.app->parsed()) return run_localize(loc, g);
        if (yl.app->parsed()) return run_yield(yl, g, threads);
        if (sd.app->parsed()) return run_sample_dist(sd, g);
    } catch (const InputError& e) {
        std::cerr << "nvmux: input error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "nvmux: input error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "nvmux: input error: " << e.what() << '\n';
        return 2;
    } catch (const UnsolvableError& e) {
        std::cerr << "nvmux: input error: " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "nvmux: input error: " << e.what() << '\n';
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "nvmux: fit did not converge: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "nvmux: error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
