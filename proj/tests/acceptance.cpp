// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "nvmux/cluster_sequence.hpp"
#include "nvmux/crosstalk.hpp"
#include "nvmux/ensemble.hpp"
#include "nvmux/fit_io.hpp"
#include "nvmux/psf.hpp"
#include "nvmux/ramsey.hpp"
#include "nvmux/spectrum.hpp"
#include "nvmux/units.hpp"
#include "nvmux/yield.hpp"
#include "sequences.hpp"
#include "synthetic.hpp"

using namespace nvmux;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

ensemble::KernelDensityModel fixture_kde(const std::string& name) {
    std::ifstream is(std::string(NVMUX_DATA_DIR) + "/" + name + "_surrogate.csv");
    return ensemble::kde_fit(ensemble::load_zpl_dataset(is), std::nullopt);
}

// 1. Analytic limits and evenness of the single-line crosstalk.
Outcome limits() {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_rel = 0.0;
    double worst_far = 0.0;
    bool even = true;
    for (int i = 0; i < 500; ++i) {
        const double omega = std::pow(10.0, 4.0 * u(gen));
        const double gamma = std::pow(10.0, 3.0 * u(gen));
        const double t = std::pow(10.0, -2.0 + 3.0 * u(gen));
        const double d = std::pow(10.0, 5.0 * u(gen));
        const double exact = -std::expm1(-gamma * t / 2.0);
        worst_rel = std::max(worst_rel, std::abs(crosstalk::transition_crosstalk(omega, 0.0, gamma, t) / exact - 1.0));
        worst_far = std::max(worst_far, crosstalk::transition_crosstalk(omega, 1e6 * omega, gamma, t));
        even = even && crosstalk::transition_crosstalk(omega, d, gamma, t) ==
                           crosstalk::transition_crosstalk(omega, -d, gamma, t);
    }
    return {worst_rel <= 1e-12 && worst_far < 1e-6 && even,
            fmt("max rel err at resonance %.2e, max far-detuned %.2e", worst_rel, worst_far) +
                (even ? ", even" : ", NOT even")};
}

// 2. Calibrating at (16 GHz, 1 %) and inverting returns 16 GHz.
Outcome anchor() {
    const double gamma = crosstalk::default_decay_rate;
    const double t = crosstalk::default_msr_duration_us;
    const double omega = crosstalk::calibrate_rabi(16.0, 0.01, gamma, t);
    const double d = crosstalk::min_safe_detuning(omega, gamma, t, 0.01);
    return {std::abs(d / 16.0 - 1.0) <= 0.01, fmt("omega %.6f rad/us, safe detuning %.12f GHz", omega, d)};
}

std::vector<double> ramsey_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 300; ++i) g.push_back(10.0 * i);
    return g;
}

// 3. Fitted fringe amplitude ratio equals 1 - Gamma.
Outcome proportionality() {
    const auto grid = ramsey_grid();
    const auto ref = spin::ramsey_with_crosstalk(spin::default_ramsey_detuning_mhz, grid, std::nullopt);
    double worst = 0.0;
    for (int k = 0; k <= 9; ++k) {
        const double g = 0.1 * k;
        const auto run = spin::ramsey_with_crosstalk(spin::default_ramsey_detuning_mhz, grid,
                                                     crosstalk::CrosstalkBreakdown::single(g));
        worst = std::max(worst, std::abs(spin::fit_amplitude_ratio(run, ref) - (1.0 - g)));
    }
    return {worst <= 1e-6, fmt("max |ratio - (1 - Gamma)| = %.2e", worst)};
}

// 4. Inject the crosstalk of a detuned readout, recover it from the contrast at 386 ns.
Outcome closed_loop() {
    const auto msr = yield::msr_preset();
    crosstalk::EmitterOpticalModel spectator;
    spectator.label = "s";
    spectator.transitions.push_back({0, crosstalk::ExcitedState::Ex, sequences::zpl, msr.omega, {{0, msr.gamma}}});
    const std::vector<double> tau{386.0};
    const auto ref = spin::ramsey_with_crosstalk(spin::default_ramsey_detuning_mhz, tau, std::nullopt);
    double worst = 0.0;
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double offset = 0.5 + 1.5 * i;
        const auto b = crosstalk::emitter_crosstalk(
            spectator, {sequences::zpl + offset, msr.duration_us}, std::map<int, double>{{0, 1.0}});
        const auto run = spin::ramsey_with_crosstalk(spin::default_ramsey_detuning_mhz, tau, b);
        const double est = spin::estimate_crosstalk_from_contrast(run.contrast[0], ref.contrast[0]);
        worst = std::max(worst, std::abs(est - b.total));
        lo = std::min(lo, b.total);
        hi = std::max(hi, b.total);
    }
    return {worst <= 1e-6, fmt("Gamma swept %.2e..%.2e, max recovery error %.2e", lo, hi, worst)};
}

// 5. Spectators at or beyond the 1 % safe detuning lose at most 1 % of fringe amplitude.
Outcome three_emitter_bound() {
    const auto msr = yield::msr_preset();
    const double safe = crosstalk::min_safe_detuning(msr.omega, msr.gamma, msr.duration_us, 0.01);
    double worst = 0.0;
    for (double scale : {1.0, 1.3, 2.0}) {
        using sequences::emitter;
        const std::vector<spin::ClusterEmitter> cluster{
            emitter("A", sequences::zpl + scale * safe, msr.omega, 2.1),
            emitter("B", sequences::zpl - scale * safe, msr.omega, 3.3), emitter("C", sequences::zpl, msr.omega, 0.0)};
        const auto spec = sequences::three_emitter_sequence(sequences::taus());
        const auto run = spin::run_cluster_sequence(cluster, spec);
        const auto ref = spin::run_cluster_sequence(cluster, spin::without_lasers(spec));
        for (const char* label : {"A", "B"})
            worst = std::max(worst, 1.0 - spin::fit_amplitude_ratio(run.at(label), ref.at(label)));
    }
    return {worst <= 0.01 + 1e-12 && worst <= 4e-2,
            fmt("safe detuning %.4f GHz, worst degradation %.6f (bound 0.01; observed bound 0.04)", safe, worst)};
}

// 6. Localization precision scales as sigma / sqrt(N); covariance errors track the scatter.
Outcome localization() {
    const double sigma = 150.0;
    std::vector<double> k;
    double worst_ratio = 1.0;
    std::string detail;
    std::mt19937_64 gen(6);
    for (double n : {1e3, 1e4, 1e5}) {
        const int reps = 200;
        std::vector<double> xs;
        std::vector<double> ys;
        double cov_precision = 0.0;
        fitting::PsfFitOptions opt;
        opt.weighting = fitting::Weighting::PoissonModel;
        for (int i = 0; i < reps; ++i) {
            const auto img = synthetic::with_poisson(synthetic::psf_image(n, sigma, 600.0, 600.0, 25, 50.0), gen);
            const auto r = fitting::fit_gaussian_psf(img, opt);
            xs.push_back(r.fit.x_nm);
            ys.push_back(r.fit.y_nm);
            cov_precision += r.precision_nm / reps;
        }
        auto sd = [&](const std::vector<double>& v) {
            double m = 0.0;
            for (double x : v) m += x / reps;
            double ss = 0.0;
            for (double x : v) ss += (x - m) * (x - m);
            return std::sqrt(ss / (reps - 1));
        };
        const double mc = std::sqrt(0.5 * (sd(xs) * sd(xs) + sd(ys) * sd(ys)));
        k.push_back(mc * std::sqrt(n) / sigma);
        const double ratio = cov_precision / mc;
        worst_ratio = std::max(worst_ratio, std::max(ratio, 1.0 / ratio));
        detail += fmt("N=%.0e: MC %.3f nm, covariance %.3f nm; ", n, mc, cov_precision);
    }
    const double mean_k = (k[0] + k[1] + k[2]) / 3.0;
    double worst_k = 0.0;
    for (double v : k) worst_k = std::max(worst_k, std::abs(v / mean_k - 1.0));
    return {worst_k <= 0.2 && worst_ratio <= 1.5,
            detail + fmt("scaling spread %.1f%%, worst covariance/MC factor %.2f", 100.0 * worst_k, worst_ratio)};
}

// 7. Seven-peak Lorentzian recovery at SNR 20.
Outcome lorentzian() {
    std::mt19937_64 gen(7);
    const auto truth = synthetic::seven_peaks();
    int good = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto s =
            synthetic::with_poisson(synthetic::spectrum(truth, synthetic::seven_peak_baseline, 0.0, 31.0, 311), gen);
        try {
            const auto fit = fitting::fit_lorentzian_sum(s, 7);
            double err = 0.0;
            for (std::size_t p = 0; p < 7; ++p)
                err = std::max(err, std::abs(fit.peaks[p].center_ghz - truth[p].center) / truth[p].fwhm);
            worst = std::max(worst, err);
            good += err < 0.05;
        } catch (const std::exception&) {
        }
    }
    return {good >= 95, fmt("%.0f of 100 realizations within 5%% of FWHM (worst %.2f%%)", good, 100.0 * worst)};
}

// 8. Sampler against the KDE CDF, and KDE normalization.
Outcome kde() {
    const auto model = fixture_kde("scd");
    auto draws = ensemble::sample(model, 8, 100000);
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = model.cdf(draws[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    const double critical = 1.6276 / std::sqrt(n);
    const double integral = model.integral_quadrature();
    return {d < critical && std::abs(integral - 1.0) <= 1e-6,
            fmt("KS D %.5f (1%% critical %.5f), integral - 1 = %.2e", d, critical, integral - 1.0)};
}

// 9. Yield limits, monotone tables and a discrete distribution checked by enumeration.
Outcome yield_correctness() {
    const auto msr = yield::msr_preset();
    const auto model = fixture_kde("scd");
    const bool single = yield::estimate_yield(model, 1, msr, 0.01, 10000, 9).yield == 1.0;

    const std::vector<std::size_t> ns{1, 2, 3, 4, 5, 6, 7, 8, 9};
    const std::vector<double> th{1e-4, 1e-3, 1e-2, 1e-1};
    const auto table = yield::yield_sweep(model, ns, th, msr, 20000, 9);
    bool monotone = true;
    for (std::size_t a = 0; a < ns.size(); ++a)
        for (std::size_t b = 0; b < th.size(); ++b) {
            const auto s = table[a * th.size() + b].successes;
            if (a > 0) monotone = monotone && s <= table[(a - 1) * th.size() + b].successes;
            if (b > 0) monotone = monotone && s >= table[a * th.size() + b - 1].successes;
        }

    const std::vector<double> atoms{0.0, 10.0, 30.0, 60.0};
    const ensemble::KernelDensityModel discrete(atoms, 1e-9);
    double worst_z = 0.0;
    for (std::size_t n : {2u, 3u, 4u}) {
        std::size_t total = 0;
        std::size_t ok = 0;
        std::vector<std::size_t> idx(n, 0);
        while (true) {
            std::vector<double> f;
            for (auto i : idx) f.push_back(atoms[i]);
            ok += yield::cluster_viability(f, msr, 0.01).viable;
            ++total;
            std::size_t j = 0;
            while (j < n && ++idx[j] == atoms.size()) idx[j++] = 0;
            if (j == n) break;
        }
        const double p = static_cast<double>(ok) / static_cast<double>(total);
        const auto e = yield::estimate_yield(discrete, n, msr, 0.01, 100000, 10);
        const double se = std::sqrt(p * (1.0 - p) / 1e5);
        worst_z = std::max(worst_z, se > 0 ? std::abs(e.yield - p) / se : (e.yield == p ? 0.0 : 1e9));
    }
    return {single && monotone && worst_z <= 3.0,
            std::string(single ? "N=1 yield 1" : "N=1 yield NOT 1") + (monotone ? ", table monotone" : ", NOT monotone") +
                fmt(", discrete worst |z| %.2f", worst_z)};
}

// 10. Surrogate golden regression against the frozen numpy oracle, plus qualitative checks.
struct Golden {
    const char* dataset;
    const char* preset;
    std::size_t n;
    std::uint64_t successes;
};
// tests/oracles/yield_oracle.py, 10^6 trials, threshold 0.01.
constexpr Golden golden[] = {
    {"scd", "msr", 2, 854803}, {"scd", "msr", 3, 618761}, {"scd", "msr", 5, 190214}, {"scd", "msr", 9, 1573},
    {"scd", "ssr", 2, 984896}, {"scd", "ssr", 3, 955634}, {"scd", "ssr", 5, 858791}, {"scd", "ssr", 9, 575752},
    {"pcd", "msr", 2, 971723}, {"pcd", "msr", 3, 916911}, {"pcd", "msr", 5, 747134}, {"pcd", "msr", 9, 344471},
    {"pcd", "ssr", 2, 997010}, {"pcd", "ssr", 3, 991188}, {"pcd", "ssr", 5, 971092}, {"pcd", "ssr", 9, 899851},
};

Outcome surrogate_yield() {
    constexpr std::uint64_t trials = 1000000;
    const std::vector<std::size_t> ns{2, 3, 5, 9};
    const std::vector<double> th{0.01};
    double worst_z = 0.0;
    bool decreasing = true;
    bool ssr_ge = true;
    std::string info;
    for (const char* dataset : {"scd", "pcd"}) {
        const auto model = fixture_kde(dataset);
        const auto m = yield::yield_sweep(model, ns, th, yield::msr_preset(), trials, 10);
        const auto s = yield::yield_sweep(model, ns, th, yield::ssr_preset(), trials, 10);
        for (std::size_t i = 0; i < ns.size(); ++i) {
            for (const auto& g : golden) {
                if (std::string(g.dataset) != dataset || g.n != ns[i]) continue;
                const auto& mine = std::string(g.preset) == "msr" ? m[i] : s[i];
                const double po = static_cast<double>(g.successes) / 1e6;
                const double se = std::sqrt(std::max(po * (1.0 - po), 1e-12) * (2.0 / 1e6));
                worst_z = std::max(worst_z, std::abs(mine.yield - po) / se);
            }
            if (i > 0) decreasing = decreasing && m[i].successes <= m[i - 1].successes && s[i].successes <= s[i - 1].successes;
            ssr_ge = ssr_ge && s[i].successes >= m[i].successes;
        }
        if (std::string(dataset) == "scd")
            info += fmt("surrogate N=3 MSR %.1f%% (reference 21%%), SSR/MSR %.2f (reference ~2); ", 100.0 * m[1].yield,
                         s[1].yield / m[1].yield);
        else
            info += fmt("surrogate N=9 PCD+SSR %.1f%% (reference 39%%); ", 100.0 * s[3].yield);
    }
    if (info.size() >= 2) info.resize(info.size() - 2);
    return {worst_z <= 3.0 && decreasing && ssr_ge,
            fmt("worst |z| vs oracle %.2f", worst_z) + (decreasing ? ", decreasing in N" : ", NOT decreasing") +
                (ssr_ge ? ", SSR >= MSR" : ", SSR < MSR somewhere") + "; info: " + info};
}

// 11. Seeded pipelines give identical bytes across re-runs and thread counts.
Outcome determinism() {
    const auto model = fixture_kde("pcd");
    const std::vector<std::size_t> ns{1, 2, 3, 5, 9};
    const std::vector<double> th{1e-3, 1e-2};
    auto sweep = [&](unsigned threads, yield::ViabilityMode mode) {
        yield::YieldOptions opt{mode, threads};
        std::ostringstream os;
        yield::write_sweep_csv(os, yield::yield_sweep(model, ns, th, yield::ssr_preset(), 20000, 11, opt));
        return os.str();
    };
    bool same = true;
    for (auto mode : {yield::ViabilityMode::WorstCase, yield::ViabilityMode::Permissive}) {
        const auto base = sweep(1, mode);
        for (unsigned t : {1u, 2u, 3u, 8u}) same = same && sweep(t, mode) == base;
    }
    auto draws = [&] {
        std::ostringstream os;
        for (double x : ensemble::sample(model, 11, 5000)) os << x << '\n';
        ensemble::write_zpl_dataset(os, ensemble::gaussian_surrogate(ensemble::scd_surrogate, 11));
        return os.str();
    };
    same = same && draws() == draws();
    auto fits = [] {
        std::mt19937_64 gen(11);
        const auto s = synthetic::with_poisson(
            synthetic::spectrum(synthetic::seven_peaks(), synthetic::seven_peak_baseline, 0.0, 31.0, 311), gen);
        const auto img = synthetic::with_poisson(synthetic::psf_image(1e4, 150.0, 600.0, 600.0, 25, 50.0), gen);
        return fitting::to_json(fitting::fit_lorentzian_sum(s, 7)).dump() +
               fitting::to_json(fitting::fit_gaussian_psf(img)).dump();
    };
    same = same && fits() == fits();
    return {same, same ? "yield sweeps (1/2/3/8 threads), sampler, surrogate and fits byte-identical"
                       : "outputs differ between runs"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"crosstalk analytic limits", 1.0, limits},
        {"calibration anchor", 1.0, anchor},
        {"fringe proportionality", 10.0, proportionality},
        {"closed-loop crosstalk recovery", 10.0, closed_loop},
        {"three-emitter crosstalk bound", 10.0, three_emitter_bound},
        {"localization scaling", 120.0, localization},
        {"Lorentzian recovery", 120.0, lorentzian},
        {"KDE and sampler consistency", 30.0, kde},
        {"yield correctness", 60.0, yield_correctness},
        {"surrogate yield regression", 300.0, surrogate_yield},
        {"determinism", 60.0, determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= criteria[i].limit_s;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s %2zu %s: %s [%.2f s of %.0f s]%s\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                    o.detail.c_str(), secs, criteria[i].limit_s, in_time ? "" : " (over time limit)");
        std::fflush(stdout);
    }
    return failures ? 1 : 0;
}
