#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

namespace nvmux::fitting {

// Sampled PLE spectrum. At least 8 points, strictly ascending frequencies.
struct Spectrum {
    std::vector<double> frequency_ghz;
    std::vector<double> counts;

    void validate() const;
};

struct LorentzianPeak {
    double center_ghz = 0.0;
    double fwhm_ghz = 0.0;
    double amplitude = 0.0;
};

// A * (w/2)^2 / ((nu - c)^2 + (w/2)^2)
double lorentzian(const LorentzianPeak& peak, double nu);

// Poisson: weight 1 / max(count, 1) from the observed counts.
// PoissonModel: fit unweighted, then refit with weight 1 / max(model, 0.1)
// taken from that first solution; avoids the low-count bias of observed
// weights and keeps the covariance honest on dark, background-free images.
enum class Weighting { Unweighted, Poisson, PoissonModel };
// Variance floor (counts) for PoissonModel weights.
inline constexpr double model_variance_floor = 0.1;

struct LorentzianFitOptions {
    Weighting weighting = Weighting::Unweighted;
    std::optional<std::vector<LorentzianPeak>> init;
};

struct LorentzianFit {
    std::vector<LorentzianPeak> peaks;  // ascending center
    double baseline = 0.0;
    double residual_rms = 0.0;
    // Parameter order: baseline, then (center, fwhm, amplitude) per sorted peak.
    Eigen::MatrixXd covariance;
    // false for peaks whose amplitude is not at least 5 standard errors above
    // zero, or whose covariance is singular: fitted noise or a split peak.
    std::vector<bool> resolved;
    int iterations = 0;

    double model(double nu) const;
};

// Seeds for the fitter: the n highest local maxima standing more than three
// noise units above the baseline (lower quartile of the counts; noise from the
// MAD of first differences), one per half-maximum region, widths at
// twice the sample spacing. Equal heights break toward lower frequency.
// Throws DomainError when fewer than n maxima qualify.
std::vector<LorentzianPeak> initialize_peaks(const Spectrum& spectrum, int n_peaks);

// Fits baseline + sum of n Lorentzians. Throws ConvergenceError (with the
// best-so-far parameters) or DomainError for coincident initial centers.
LorentzianFit fit_lorentzian_sum(const Spectrum& spectrum, int n_peaks, const LorentzianFitOptions& options = {});

}  // namespace nvmux::fitting
