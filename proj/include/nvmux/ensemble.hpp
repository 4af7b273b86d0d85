#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvmux/rng.hpp"

namespace nvmux::ensemble {

// ZPL frequencies of an emitter ensemble, optionally tagged by emitter site.
struct ZplDataset {
    std::vector<double> frequency_ghz;
    std::vector<std::string> site_ids;  // empty, or one per frequency

    void validate() const;
};

// CSV with header "frequency_ghz" or "frequency_ghz,site_id"; '#' lines skipped.
ZplDataset load_zpl_dataset(std::istream& is);
void write_zpl_dataset(std::ostream& os, const ZplDataset& data);

struct SummaryStats {
    double mean_ghz = 0.0;
    double std_ghz = 0.0;  // unbiased; 0 for a single sample
    std::size_t count = 0;
};

SummaryStats summary_stats(const ZplDataset& data);

// Gaussian stand-ins for ensembles whose raw frequencies are not available.
struct SurrogateSpec {
    std::string name;
    double sigma_ghz;
    std::size_t count;
};
// Polycrystalline sample: sigma 294 GHz over 87 lines.
inline const SurrogateSpec pcd_surrogate{"pcd", 294.0, 87};
// Single-crystal sample: about 5x narrower than the PCD, 406 lines.
inline const SurrogateSpec scd_surrogate{"scd", 60.0, 406};
// Nominal NV- ZPL (637 nm), GHz. Only differences matter downstream.
inline constexpr double nominal_zpl_ghz = 470400.0;

ZplDataset gaussian_surrogate(const SurrogateSpec& spec, std::uint64_t seed, double center_ghz = nominal_zpl_ghz);
const SurrogateSpec& surrogate_by_name(const std::string& name);

enum class SiteWeighting { PerTransition, PerSite };

// Gaussian-kernel density estimate. Weights are normalized to sum to 1.
class KernelDensityModel {
public:
    KernelDensityModel(std::vector<double> points_ghz, double bandwidth_ghz, std::vector<double> weights = {});

    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    double bandwidth() const { return bandwidth_; }

    double density(double nu_ghz) const;  // per GHz
    double cdf(double nu_ghz) const;
    double mean() const;
    double stddev() const;

    // Composite Simpson integral of density() over the data range padded by
    // 8 bandwidths on each side.
    double integral_quadrature() const;

    // Pick a point by weight, add N(0, bandwidth^2).
    double draw(rng::Philox4x32& g) const;

private:
    std::vector<double> points_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;  // empty when weights are uniform
    double bandwidth_;
};

// 1.06 * sd * n^(-1/5)
double silverman_bandwidth(const std::vector<double>& x);

// bandwidth nullopt selects Silverman's rule. Per-site weighting gives every
// site equal total mass and requires site ids.
KernelDensityModel kde_fit(const ZplDataset& data, std::optional<double> bandwidth_ghz,
                           SiteWeighting weighting = SiteWeighting::PerTransition);

// n i.i.d. draws from substream 0 of `seed`.
std::vector<double> sample(const KernelDensityModel& model, std::uint64_t seed, std::size_t n);

// {"bandwidth_ghz": f, "samples_ghz": [...]} plus "weights" when non-uniform.
nlohmann::json to_json(const KernelDensityModel& model);
KernelDensityModel kde_from_json(const nlohmann::json& doc);

// "frequency_ghz,density_per_ghz" on an even grid of `points` samples.
void write_density_csv(std::ostream& os, const KernelDensityModel& model, double lo_ghz, double hi_ghz,
                       std::size_t points);

}  // namespace nvmux::ensemble
