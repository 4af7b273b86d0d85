#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nvmux/errors.hpp"
#include "nvmux/yield.hpp"

using namespace nvmux;
using namespace nvmux::yield;
using ensemble::KernelDensityModel;

namespace {

// Atoms with a bandwidth far below any relevant scale.
KernelDensityModel atoms(std::vector<double> points) { return KernelDensityModel(std::move(points), 1e-9); }

bool within_3se(const YieldEstimate& e, double p) {
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(e.trials));
    return std::abs(e.yield - p) <= 3.0 * se + 1e-12;
}

}  // namespace

TEST_CASE("presets") {
    const auto msr = msr_preset();
    CHECK(msr.crosstalk_at(16.0) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(msr.calibrated);
    const auto ssr = ssr_preset();
    CHECK(ssr.omega == ssr.gamma);
    CHECK(ssr.duration_us == 3.7);
    CHECK(preset_by_name("ssr").name == "ssr");
    CHECK_THROWS_AS(preset_by_name("fast"), DomainError);

    const auto back = preset_from_json(to_json(msr));
    CHECK(back.omega == doctest::Approx(msr.omega).epsilon(1e-14));
    CHECK(preset_from_json(nlohmann::json{{"name", "ssr"}}).duration_us == 3.7);
    const auto custom = preset_from_json(
        nlohmann::json{{"name", "x"}, {"omega_mhz", 100.0}, {"gamma_mhz", 80.0}, {"duration_us", 1.0}});
    CHECK(custom.omega == 100.0);
    CHECK_THROWS_AS(preset_from_json(nlohmann::json{{"name", "x"}, {"omega_mhz", "fast"}}), ParseError);
    CHECK_THROWS_AS(preset_from_json(nlohmann::json::array()), ParseError);
}

TEST_CASE("cluster viability") {
    const auto msr = msr_preset();
    SUBCASE("single emitter") {
        const std::vector<double> f{470400.0};
        const auto v = cluster_viability(f, msr, 0.0);
        CHECK(v.viable);
        CHECK(v.worst_crosstalk == 0.0);
    }
    SUBCASE("coincident lines saturate") {
        const std::vector<double> f{1.0, 1.0};
        const auto v = cluster_viability(f, msr, 0.01);
        CHECK_FALSE(v.viable);
        CHECK(v.worst_crosstalk == doctest::Approx(-std::expm1(-msr.gamma * msr.duration_us / 2.0)));
    }
    SUBCASE("spaced triple matches a brute-force pair scan") {
        const std::vector<double> f{0.0, 20.0, 45.0};
        double worst = 0.0;
        for (double a : f)
            for (double b : f)
                if (a != b) worst = std::max(worst, msr.crosstalk_at(std::abs(a - b)));
        const auto v = cluster_viability(f, msr, 0.01);
        CHECK(v.viable);
        CHECK(v.worst_crosstalk == worst);
        CHECK_FALSE(cluster_viability(f, msr, 0.5 * worst).viable);
    }
    SUBCASE("emitter-model overload agrees for single-line emitters") {
        std::vector<crosstalk::EmitterOpticalModel> ems;
        for (double f : {0.0, 12.0, 40.0}) {
            crosstalk::EmitterOpticalModel m;
            m.label = "e";
            m.transitions.push_back({0, crosstalk::ExcitedState::Ex, 470400.0 + f, msr.omega, {{0, msr.gamma}}});
            ems.push_back(m);
        }
        const std::vector<double> f{0.0, 12.0, 40.0};
        const auto a = cluster_viability(ems, msr, 0.01);
        const auto b = cluster_viability(f, msr, 0.01);
        CHECK(a.viable == b.viable);
        CHECK(a.worst_crosstalk == doctest::Approx(b.worst_crosstalk).epsilon(1e-12));
    }
    CHECK_THROWS_AS(cluster_viability(std::vector<double>{}, msr, 0.01), DomainError);
}

TEST_CASE("Wilson interval") {
    auto e = make_estimate(3, 0.01, 100, 50);
    CHECK(e.ci_lo == doctest::Approx(0.4038315303659956).epsilon(1e-12));
    CHECK(e.ci_hi == doctest::Approx(0.5961684696340044).epsilon(1e-12));
    e = make_estimate(3, 0.01, 100, 0);
    CHECK(e.ci_lo == 0.0);
    CHECK(e.ci_hi == doctest::Approx(0.03699349820698568).epsilon(1e-12));
    e = make_estimate(3, 0.01, 1000, 7);
    CHECK(e.ci_lo == doctest::Approx(0.0033948684009907646).epsilon(1e-12));
    CHECK(e.ci_hi == doctest::Approx(0.014378315465766588).epsilon(1e-12));
    CHECK_THROWS_AS(make_estimate(3, 0.01, 0, 0), DomainError);
    CHECK_THROWS_AS(make_estimate(3, 0.01, 10, 11), DomainError);
}

TEST_CASE("yield limits") {
    const auto msr = msr_preset();
    const auto model = ensemble::kde_fit(ensemble::gaussian_surrogate(ensemble::scd_surrogate, 3), std::nullopt);
    CHECK(estimate_yield(model, 1, msr, 0.01, 1000, 9).yield == 1.0);
    CHECK(estimate_yield(model, 6, msr, 1.0, 1000, 9).yield == 1.0);
    CHECK_THROWS_AS(estimate_yield(model, 0, msr, 0.01, 1000, 9), DomainError);
    CHECK_THROWS_AS(estimate_yield(model, 2, msr, 0.01, 10, 9), DomainError);
    CHECK_THROWS_AS(estimate_yield(model, 2, msr, -0.1, 1000, 9), DomainError);
}

TEST_CASE("two-atom distribution") {
    const auto msr = msr_preset();
    const auto model = atoms({0.0, 100.0});
    CHECK(within_3se(estimate_yield(model, 2, msr, 0.01, 20000, 1), 0.5));
    CHECK(estimate_yield(model, 3, msr, 0.01, 2000, 1).yield == 0.0);
}

TEST_CASE("four-atom distribution against exact enumeration") {
    const auto msr = msr_preset();
    const std::vector<double> pts{0.0, 10.0, 30.0, 60.0};
    const auto model = atoms(pts);
    for (std::size_t n : {2u, 3u}) {
        for (auto mode : {ViabilityMode::WorstCase, ViabilityMode::Permissive}) {
            std::size_t total = 0, ok = 0;
            std::vector<std::size_t> idx(n, 0);
            while (true) {
                std::vector<double> f;
                for (auto i : idx) f.push_back(pts[i]);
                ok += cluster_viability(f, msr, 0.01, mode).viable;
                ++total;
                std::size_t k = 0;
                while (k < n && ++idx[k] == pts.size()) idx[k++] = 0;
                if (k == n) break;
            }
            const double exact = static_cast<double>(ok) / static_cast<double>(total);
            YieldOptions opt;
            opt.mode = mode;
            CHECK(within_3se(estimate_yield(model, n, msr, 0.01, 20000, 4, opt), exact));
        }
    }
}

TEST_CASE("sweep structure") {
    const auto msr = msr_preset();
    const auto model = ensemble::kde_fit(ensemble::gaussian_surrogate(ensemble::scd_surrogate, 3), std::nullopt);
    const std::vector<std::size_t> ns{1, 2, 3, 4, 6};
    const std::vector<double> th{0.001, 0.01, 0.1};
    const auto table = yield_sweep(model, ns, th, msr, 2000, 12);
    REQUIRE(table.size() == ns.size() * th.size());
    for (std::size_t a = 0; a < ns.size(); ++a)
        for (std::size_t b = 0; b < th.size(); ++b) {
            const auto& e = table[a * th.size() + b];
            CHECK(e.n_emitters == ns[a]);
            CHECK(e.gamma_threshold == th[b]);
            if (a > 0) CHECK(e.successes <= table[(a - 1) * th.size() + b].successes);
            if (b > 0) CHECK(e.successes >= table[a * th.size() + b - 1].successes);
        }

    SUBCASE("thread count does not change results") {
        YieldOptions opt;
        opt.threads = 3;
        const auto threaded = yield_sweep(model, ns, th, msr, 2000, 12, opt);
        for (std::size_t i = 0; i < table.size(); ++i) CHECK(threaded[i].successes == table[i].successes);
    }
    SUBCASE("single cell agrees with the sweep") {
        CHECK(estimate_yield(model, 3, msr, 0.01, 2000, 12).successes == table[2 * th.size() + 1].successes);
    }
    SUBCASE("permissive is never stricter") {
        YieldOptions opt;
        opt.mode = ViabilityMode::Permissive;
        const auto perm = yield_sweep(model, ns, th, msr, 2000, 12, opt);
        for (std::size_t i = 0; i < table.size(); ++i) CHECK(perm[i].successes >= table[i].successes);
    }
    SUBCASE("single-shot readout tolerates denser clusters") {
        const auto ssr = yield_sweep(model, ns, th, ssr_preset(), 2000, 12);
        for (std::size_t i = 0; i < table.size(); ++i) CHECK(ssr[i].successes >= table[i].successes);
    }
    SUBCASE("CSV and JSON") {
        std::ostringstream os;
        write_sweep_csv(os, table);
        CHECK(os.str().rfind("n,threshold,trials,successes,yield,ci_lo,ci_hi\n", 0) == 0);
        const auto doc = to_json(table);
        CHECK(doc.size() == table.size());
    }
}
