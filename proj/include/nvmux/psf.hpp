#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "nvmux/spectrum.hpp"

namespace nvmux::fitting {

// Photon-count image from a resonant scan. counts(row, col); pixel (0, 0)
// sits at `origin`, columns advance in x and rows in y.
struct PsfImage {
    double pixel_size_nm = 1.0;
    double origin_x_nm = 0.0;
    double origin_y_nm = 0.0;
    Eigen::MatrixXd counts;

    void validate() const;
    double x_at(Eigen::Index col) const { return origin_x_nm + pixel_size_nm * static_cast<double>(col); }
    double y_at(Eigen::Index row) const { return origin_y_nm + pixel_size_nm * static_cast<double>(row); }
};

struct PsfParameters {
    double amplitude = 0.0;
    double x_nm = 0.0;
    double y_nm = 0.0;
    double sigma_x_nm = 0.0;
    double sigma_y_nm = 0.0;
    double offset = 0.0;
};

// A exp(-((x-x0)^2/(2 sx^2) + (y-y0)^2/(2 sy^2))) + offset
double gaussian_psf(const PsfParameters& p, double x, double y);

struct LocalizationResult {
    PsfParameters fit;
    double std_error_x_nm = 0.0;
    double std_error_y_nm = 0.0;
    double precision_nm = 0.0;  // sqrt((ex^2 + ey^2) / 2)
    Eigen::MatrixXd covariance;  // order: A, x0, y0, sx, sy, offset
    double residual_rms = 0.0;
    int iterations = 0;
};

// Moment-based starting point: median offset, background-subtracted centroid
// and second moments.
PsfParameters initial_psf_guess(const PsfImage& image);

struct PsfFitOptions {
    // Photon images are heteroscedastic: with little background the
    // unweighted covariance understates the scatter of the center about 2x.
    // PoissonModel is the weighting that tracks it down to ~10^3 photons.
    Weighting weighting = Weighting::Unweighted;
    std::optional<PsfParameters> init;
};

// Throws DomainError for an all-zero image and ConvergenceError if the fit stalls.
LocalizationResult fit_gaussian_psf(const PsfImage& image, const PsfFitOptions& options = {});

}  // namespace nvmux::fitting
