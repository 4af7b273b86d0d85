#include "nvmux/psf.hpp"

#include <algorithm>
#include <cmath>

#include "nvmux/errors.hpp"
#include "nvmux/levenberg_marquardt.hpp"

namespace nvmux::fitting {

void PsfImage::validate() const {
    if (counts.rows() < 5 || counts.cols() < 5) throw DomainError("PSF image must be at least 5x5");
    if (!(pixel_size_nm > 0.0)) throw DomainError("pixel size must be positive");
    if (!counts.allFinite() || counts.minCoeff() < 0.0) throw DomainError("PSF image counts must be finite and >= 0");
}

double gaussian_psf(const PsfParameters& p, double x, double y) {
    const double dx = (x - p.x_nm) / p.sigma_x_nm;
    const double dy = (y - p.y_nm) / p.sigma_y_nm;
    return p.amplitude * std::exp(-0.5 * (dx * dx + dy * dy)) + p.offset;
}

PsfParameters initial_psf_guess(const PsfImage& image) {
    std::vector<double> flat(image.counts.data(), image.counts.data() + image.counts.size());
    std::nth_element(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(flat.size() / 2), flat.end());
    const double offset = flat[flat.size() / 2];

    double w_sum = 0.0;
    double mx = 0.0;
    double my = 0.0;
    for (Eigen::Index r = 0; r < image.counts.rows(); ++r)
        for (Eigen::Index c = 0; c < image.counts.cols(); ++c) {
            const double w = std::max(image.counts(r, c) - offset, 0.0);
            w_sum += w;
            mx += w * image.x_at(c);
            my += w * image.y_at(r);
        }
    PsfParameters p;
    p.offset = offset;
    p.amplitude = std::max(image.counts.maxCoeff() - offset, 1e-12);
    if (w_sum <= 0.0) {
        p.x_nm = image.x_at(image.counts.cols() / 2);
        p.y_nm = image.y_at(image.counts.rows() / 2);
        p.sigma_x_nm = p.sigma_y_nm = image.pixel_size_nm * static_cast<double>(image.counts.cols()) / 6.0;
        return p;
    }
    mx /= w_sum;
    my /= w_sum;
    double vx = 0.0;
    double vy = 0.0;
    for (Eigen::Index r = 0; r < image.counts.rows(); ++r)
        for (Eigen::Index c = 0; c < image.counts.cols(); ++c) {
            const double w = std::max(image.counts(r, c) - offset, 0.0);
            vx += w * (image.x_at(c) - mx) * (image.x_at(c) - mx);
            vy += w * (image.y_at(r) - my) * (image.y_at(r) - my);
        }
    p.x_nm = mx;
    p.y_nm = my;
    p.sigma_x_nm = std::max(std::sqrt(vx / w_sum), 0.5 * image.pixel_size_nm);
    p.sigma_y_nm = std::max(std::sqrt(vy / w_sum), 0.5 * image.pixel_size_nm);
    return p;
}

LocalizationResult fit_gaussian_psf(const PsfImage& image, const PsfFitOptions& options) {
    image.validate();
    if (image.counts.maxCoeff() <= 0.0) throw DomainError("PSF image is all zero");

    const PsfParameters guess = options.init ? *options.init : initial_psf_guess(image);
    Eigen::VectorXd p0(6);
    p0 << guess.amplitude, guess.x_nm, guess.y_nm, guess.sigma_x_nm, guess.sigma_y_nm, guess.offset;

    const Eigen::Index rows = image.counts.rows();
    const Eigen::Index cols = image.counts.cols();
    Eigen::VectorXd sqrt_w = Eigen::VectorXd::Ones(rows * cols);
    if (options.weighting == Weighting::Poisson)
        for (Eigen::Index i = 0; i < rows * cols; ++i)
            sqrt_w[i] = 1.0 / std::sqrt(std::max(image.counts(i / cols, i % cols), 1.0));
    ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& res, Eigen::MatrixXd* jac) {
        res.resize(rows * cols);
        if (jac) jac->resize(rows * cols, 6);
        const double sx = p[3];
        const double sy = p[4];
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double dy = image.y_at(r) - p[2];
            for (Eigen::Index c = 0; c < cols; ++c) {
                const double dx = image.x_at(c) - p[1];
                const double e = std::exp(-0.5 * (dx * dx / (sx * sx) + dy * dy / (sy * sy)));
                const Eigen::Index i = r * cols + c;
                const double w = sqrt_w[i];
                res[i] = w * (p[0] * e + p[5] - image.counts(r, c));
                if (jac) {
                    (*jac)(i, 0) = w * e;
                    (*jac)(i, 1) = w * p[0] * e * dx / (sx * sx);
                    (*jac)(i, 2) = w * p[0] * e * dy / (sy * sy);
                    (*jac)(i, 3) = w * p[0] * e * dx * dx / (sx * sx * sx);
                    (*jac)(i, 4) = w * p[0] * e * dy * dy / (sy * sy * sy);
                    (*jac)(i, 5) = w;
                }
            }
        }
    };

    LmResult lm = levenberg_marquardt(fn, p0);
    if (options.weighting == Weighting::PoissonModel) {
        Eigen::VectorXd r;
        fn(lm.parameters, r, nullptr);
        for (Eigen::Index i = 0; i < rows * cols; ++i)
            sqrt_w[i] = 1.0 / std::sqrt(std::max(r[i] + image.counts(i / cols, i % cols), model_variance_floor));
        const int first_iterations = lm.iterations;
        lm = levenberg_marquardt(fn, lm.parameters);
        lm.iterations += first_iterations;
    }
    LocalizationResult out;
    const auto& q = lm.parameters;
    out.fit = {q[0], q[1], q[2], std::abs(q[3]), std::abs(q[4]), q[5]};
    out.covariance = lm.covariance();
    out.std_error_x_nm = std::sqrt(std::max(out.covariance(1, 1), 0.0));
    out.std_error_y_nm = std::sqrt(std::max(out.covariance(2, 2), 0.0));
    out.precision_nm = std::sqrt(0.5 * (out.std_error_x_nm * out.std_error_x_nm + out.std_error_y_nm * out.std_error_y_nm));
    Eigen::VectorXd r;
    fn(q, r, nullptr);
    out.residual_rms = std::sqrt(r.cwiseQuotient(sqrt_w).squaredNorm() / static_cast<double>(rows * cols));
    out.iterations = lm.iterations;
    return out;
}

}  // namespace nvmux::fitting
