#include "nvmux/yield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "nvmux/errors.hpp"
#include "nvmux/format.hpp"

namespace nvmux::yield {

namespace {

constexpr double wilson_z = 1.959963984540054;

// crosstalk(a, b): probability of disturbing b while reading a.
template <typename Crosstalk>
Viability judge(std::size_t n, Crosstalk&& crosstalk, double threshold, ViabilityMode mode) {
    Viability v;
    // disturbs[b]: emitters whose readout disturbs b, so b is read before them
    std::vector<std::vector<std::size_t>> disturbs(n);
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            const double g = crosstalk(a, b);
            v.worst_crosstalk = std::max(v.worst_crosstalk, g);
            if (g > threshold) {
                disturbs[b].push_back(a);
                ++indegree[a];
            }
        }
    if (mode == ViabilityMode::WorstCase) {
        v.viable = v.worst_crosstalk <= threshold;
        return v;
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push_back(i);
    std::size_t ordered = 0;
    while (!ready.empty()) {
        const auto b = ready.back();
        ready.pop_back();
        ++ordered;
        for (auto a : disturbs[b])
            if (--indegree[a] == 0) ready.push_back(a);
    }
    v.viable = ordered == n;
    return v;
}

bool permissive_viable(const std::vector<double>& matrix, std::size_t stride, std::size_t n, double threshold) {
    return judge(n, [&](std::size_t a, std::size_t b) { return matrix[a * stride + b]; }, threshold,
                 ViabilityMode::Permissive)
        .viable;
}

}  // namespace

Viability cluster_viability(std::span<const double> freqs, const ReadoutPreset& preset, double threshold,
                            ViabilityMode mode) {
    preset.validate();
    if (freqs.empty()) throw DomainError("cluster needs at least one emitter");
    return judge(
        freqs.size(), [&](std::size_t a, std::size_t b) { return preset.crosstalk_at(std::abs(freqs[a] - freqs[b])); },
        threshold, mode);
}

Viability cluster_viability(std::span<const crosstalk::EmitterOpticalModel> emitters, const ReadoutPreset& preset,
                            double threshold, ViabilityMode mode) {
    preset.validate();
    if (emitters.empty()) throw DomainError("cluster needs at least one emitter");
    const std::map<int, double> in_zero{{0, 1.0}};
    return judge(
        emitters.size(),
        [&](std::size_t a, std::size_t b) {
            const crosstalk::ReadoutPulse pulse{emitters[a].readout_transition().frequency_ghz, preset.duration_us};
            return crosstalk::emitter_crosstalk(emitters[b], pulse, in_zero).total;
        },
        threshold, mode);
}

YieldEstimate make_estimate(std::size_t n, double threshold, std::uint64_t trials, std::uint64_t successes) {
    if (trials == 0 || successes > trials) throw DomainError("invalid trial counts");
    YieldEstimate e{n, threshold, trials, successes, 0.0, 0.0, 0.0};
    const double nt = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / nt;
    e.yield = p;
    const double z2 = wilson_z * wilson_z;
    const double denom = 1.0 + z2 / nt;
    const double center = (p + z2 / (2.0 * nt)) / denom;
    const double half = wilson_z / denom * std::sqrt(p * (1.0 - p) / nt + z2 / (4.0 * nt * nt));
    e.ci_lo = std::max(0.0, std::min(center - half, p));
    e.ci_hi = std::min(1.0, std::max(center + half, p));
    return e;
}

std::vector<YieldEstimate> yield_sweep(const ensemble::KernelDensityModel& model, std::span<const std::size_t> n_values,
                                       std::span<const double> thresholds, const ReadoutPreset& preset,
                                       std::uint64_t trials, std::uint64_t seed, const YieldOptions& options) {
    preset.validate();
    if (trials < 100) throw DomainError("yield estimation needs at least 100 trials");
    if (n_values.empty() || thresholds.empty()) throw DomainError("empty sweep grid");
    for (auto n : n_values)
        if (n < 1) throw DomainError("cluster size must be >= 1");
    for (double t : thresholds)
        if (!(t >= 0.0)) throw DomainError("thresholds must be >= 0");
    const std::size_t max_n = *std::max_element(n_values.begin(), n_values.end());
    const std::size_t cells = n_values.size() * thresholds.size();

    auto run_range = [&](std::uint64_t begin, std::uint64_t end, std::vector<std::uint64_t>& counts) {
        std::vector<double> f(max_n);
        std::vector<double> worst(max_n + 1, 0.0);
        std::vector<double> matrix;
        for (std::uint64_t t = begin; t < end; ++t) {
            rng::Philox4x32 g(seed, t);
            for (auto& x : f) x = model.draw(g);
            if (options.mode == ViabilityMode::WorstCase) {
                // Crosstalk falls with |offset|, so the closest pair decides.
                double min_sep = std::numeric_limits<double>::infinity();
                for (std::size_t k = 1; k <= max_n; ++k) {
                    for (std::size_t j = 0; j + 1 < k; ++j) min_sep = std::min(min_sep, std::abs(f[k - 1] - f[j]));
                    worst[k] = k == 1 ? 0.0 : preset.crosstalk_at(min_sep);
                }
                for (std::size_t a = 0; a < n_values.size(); ++a)
                    for (std::size_t b = 0; b < thresholds.size(); ++b)
                        if (worst[n_values[a]] <= thresholds[b]) ++counts[a * thresholds.size() + b];
            } else {
                matrix.assign(max_n * max_n, 0.0);
                for (std::size_t a = 0; a < max_n; ++a)
                    for (std::size_t b = 0; b < max_n; ++b)
                        if (a != b) matrix[a * max_n + b] = preset.crosstalk_at(std::abs(f[a] - f[b]));
                for (std::size_t a = 0; a < n_values.size(); ++a)
                    for (std::size_t b = 0; b < thresholds.size(); ++b)
                        if (permissive_viable(matrix, max_n, n_values[a], thresholds[b]))
                            ++counts[a * thresholds.size() + b];
            }
        }
    };

    const unsigned threads = std::max(1u, options.threads);
    std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(cells, 0));
    if (threads == 1) {
        run_range(0, trials, partial[0]);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            const std::uint64_t begin = trials * w / threads;
            const std::uint64_t end = trials * (w + 1) / threads;
            pool.emplace_back(run_range, begin, end, std::ref(partial[w]));
        }
        for (auto& th : pool) th.join();
    }

    std::vector<YieldEstimate> table;
    table.reserve(cells);
    for (std::size_t a = 0; a < n_values.size(); ++a)
        for (std::size_t b = 0; b < thresholds.size(); ++b) {
            std::uint64_t s = 0;
            for (const auto& p : partial) s += p[a * thresholds.size() + b];
            table.push_back(make_estimate(n_values[a], thresholds[b], trials, s));
        }
    return table;
}

YieldEstimate estimate_yield(const ensemble::KernelDensityModel& model, std::size_t n, const ReadoutPreset& preset,
                             double gamma_threshold, std::uint64_t trials, std::uint64_t seed,
                             const YieldOptions& options) {
    const std::size_t ns[] = {n};
    const double ts[] = {gamma_threshold};
    return yield_sweep(model, ns, ts, preset, trials, seed, options).front();
}

void write_sweep_csv(std::ostream& os, std::span<const YieldEstimate> table) {
    os << "n,threshold,trials,successes,yield,ci_lo,ci_hi\n";
    for (const auto& e : table)
        os << e.n_emitters << ',' << fmt_double(e.gamma_threshold) << ',' << e.trials << ',' << e.successes << ','
           << fmt_double(e.yield) << ',' << fmt_double(e.ci_lo) << ',' << fmt_double(e.ci_hi) << '\n';
}

nlohmann::json to_json(std::span<const YieldEstimate> table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : table)
        rows.push_back({{"n", e.n_emitters},
                        {"threshold", e.gamma_threshold},
                        {"trials", e.trials},
                        {"successes", e.successes},
                        {"yield", e.yield},
                        {"ci95", {e.ci_lo, e.ci_hi}}});
    return rows;
}

}  // namespace nvmux::yield
