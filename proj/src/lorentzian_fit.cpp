#include "nvmux/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "nvmux/errors.hpp"
#include "nvmux/levenberg_marquardt.hpp"

namespace nvmux::fitting {

namespace {

// A spare peak parked on a noise bump often reaches 3 sigma; 5 leaves margin
// for having searched the whole spectrum.
constexpr double resolved_sigmas = 5.0;

}  // namespace

namespace {

double median(std::vector<double> v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    return m;
}

}  // namespace

void Spectrum::validate() const {
    if (frequency_ghz.size() != counts.size()) throw DomainError("spectrum columns differ in length");
    if (frequency_ghz.size() < 8) throw DomainError("spectrum needs at least 8 points");
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (!std::isfinite(frequency_ghz[i]) || !std::isfinite(counts[i])) throw DomainError("non-finite spectrum value");
        if (counts[i] < 0.0) throw DomainError("negative counts in spectrum");
        if (i > 0 && !(frequency_ghz[i] > frequency_ghz[i - 1]))
            throw DomainError("spectrum frequencies must be strictly ascending");
    }
}

double lorentzian(const LorentzianPeak& peak, double nu) {
    const double h = 0.5 * peak.fwhm_ghz;
    const double d = nu - peak.center_ghz;
    return peak.amplitude * h * h / (d * d + h * h);
}

double LorentzianFit::model(double nu) const {
    double f = baseline;
    for (const auto& p : peaks) f += lorentzian(p, nu);
    return f;
}

std::vector<LorentzianPeak> initialize_peaks(const Spectrum& spectrum, int n_peaks) {
    spectrum.validate();
    if (n_peaks < 1) throw DomainError("n_peaks must be >= 1");
    const auto& y = spectrum.counts;
    const auto& x = spectrum.frequency_ghz;
    const std::size_t n = y.size();

    // Dense peak sets drag the median and MAD of the raw counts far above the
    // true floor, so the baseline is the lower quartile and the noise is the
    // MAD of first differences (insensitive to the smooth signal).
    std::vector<double> sorted = y;
    std::sort(sorted.begin(), sorted.end());
    const double base = sorted[(n - 1) / 4];
    std::vector<double> diff(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) diff[i] = std::abs(y[i + 1] - y[i]);
    const double noise = 1.4826 * median(diff) / std::numbers::sqrt2;
    const double threshold = base + 3.0 * noise;

    std::vector<std::size_t> maxima;
    for (std::size_t i = 0; i < n; ++i) {
        // plateaus report their lowest-frequency sample
        const bool left_ok = i == 0 || y[i] > y[i - 1];
        const bool right_ok = i + 1 == n || y[i] >= y[i + 1];
        if (left_ok && right_ok && y[i] > threshold) maxima.push_back(i);
    }
    std::stable_sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });

    // Accept maxima greedily, skipping those inside the half-maximum region of
    // an already accepted peak.
    std::vector<std::pair<std::size_t, std::size_t>> claimed;
    std::vector<std::size_t> accepted;
    for (std::size_t i : maxima) {
        if (static_cast<int>(accepted.size()) == n_peaks) break;
        bool inside = false;
        for (const auto& [lo, hi] : claimed) inside = inside || (i >= lo && i <= hi);
        if (inside) continue;
        const double half = 0.5 * (y[i] + base);
        std::size_t lo = i;
        std::size_t hi = i;
        while (lo > 0 && y[lo - 1] >= half) --lo;
        while (hi + 1 < n && y[hi + 1] >= half) ++hi;
        claimed.emplace_back(lo, hi);
        accepted.push_back(i);
    }
    if (static_cast<int>(accepted.size()) < n_peaks)
        throw DomainError("found " + std::to_string(accepted.size()) + " peaks above the noise floor, " +
                          std::to_string(n_peaks) + " requested");

    std::sort(accepted.begin(), accepted.end());
    const double spacing = (x.back() - x.front()) / static_cast<double>(n - 1);
    std::vector<LorentzianPeak> out;
    for (std::size_t i : accepted) out.push_back({x[i], 2.0 * spacing, y[i] - base});
    return out;
}

LorentzianFit fit_lorentzian_sum(const Spectrum& spectrum, int n_peaks, const LorentzianFitOptions& options) {
    spectrum.validate();
    if (n_peaks < 1) throw DomainError("n_peaks must be >= 1");
    const std::size_t m = spectrum.counts.size();
    if (m < static_cast<std::size_t>(3 * n_peaks + 1)) throw DomainError("too few points for the requested peaks");

    std::vector<LorentzianPeak> init = options.init ? *options.init : initialize_peaks(spectrum, n_peaks);
    if (static_cast<int>(init.size()) != n_peaks) throw DomainError("initial peak list size differs from n_peaks");
    for (std::size_t a = 0; a < init.size(); ++a)
        for (std::size_t b = a + 1; b < init.size(); ++b)
            if (init[a].center_ghz == init[b].center_ghz) throw DomainError("degenerate initialization: coincident centers");

    std::vector<double> sqrt_w(m, 1.0);
    if (options.weighting == Weighting::Poisson)
        for (std::size_t i = 0; i < m; ++i) sqrt_w[i] = 1.0 / std::sqrt(std::max(spectrum.counts[i], 1.0));

    std::vector<double> sorted_counts = spectrum.counts;
    std::sort(sorted_counts.begin(), sorted_counts.end());
    Eigen::VectorXd p0(1 + 3 * n_peaks);
    p0[0] = sorted_counts[m / 2];
    for (int k = 0; k < n_peaks; ++k) {
        p0[1 + 3 * k] = init[static_cast<std::size_t>(k)].center_ghz;
        p0[2 + 3 * k] = init[static_cast<std::size_t>(k)].fwhm_ghz;
        p0[3 + 3 * k] = init[static_cast<std::size_t>(k)].amplitude;
    }

    const auto& nu = spectrum.frequency_ghz;
    const auto& y = spectrum.counts;
    ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(static_cast<Eigen::Index>(m));
        if (jac) jac->setZero(static_cast<Eigen::Index>(m), p.size());
        for (std::size_t i = 0; i < m; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            double f = p[0];
            if (jac) (*jac)(row, 0) = sqrt_w[i];
            for (int k = 0; k < n_peaks; ++k) {
                const double c = p[1 + 3 * k];
                const double h = 0.5 * p[2 + 3 * k];
                const double a = p[3 + 3 * k];
                const double d = nu[i] - c;
                const double den = d * d + h * h;
                const double shape = h * h / den;
                f += a * shape;
                if (jac) {
                    const double den2 = den * den;
                    (*jac)(row, 1 + 3 * k) = sqrt_w[i] * a * h * h * 2.0 * d / den2;
                    (*jac)(row, 2 + 3 * k) = sqrt_w[i] * a * h * d * d / den2;
                    (*jac)(row, 3 + 3 * k) = sqrt_w[i] * shape;
                }
            }
            r[row] = sqrt_w[i] * (f - y[i]);
        }
    };

    LmResult lm = levenberg_marquardt(fn, p0);
    if (options.weighting == Weighting::PoissonModel) {
        Eigen::VectorXd r;
        fn(lm.parameters, r, nullptr);
        for (std::size_t i = 0; i < m; ++i)
            sqrt_w[i] = 1.0 / std::sqrt(std::max(r[static_cast<Eigen::Index>(i)] + y[i], model_variance_floor));
        const int first_iterations = lm.iterations;
        lm = levenberg_marquardt(fn, lm.parameters);
        lm.iterations += first_iterations;
    }
    const Eigen::MatrixXd cov = lm.covariance();

    std::vector<int> order(static_cast<std::size_t>(n_peaks));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return lm.parameters[1 + 3 * a] < lm.parameters[1 + 3 * b]; });

    LorentzianFit out;
    out.baseline = lm.parameters[0];
    out.iterations = lm.iterations;
    const auto np = lm.parameters.size();
    std::vector<Eigen::Index> perm{0};
    for (int k : order) {
        out.peaks.push_back({lm.parameters[1 + 3 * k], std::abs(lm.parameters[2 + 3 * k]), lm.parameters[3 + 3 * k]});
        for (int q = 1; q <= 3; ++q) perm.push_back(q + 3 * k);
    }
    out.covariance.resize(np, np);
    for (Eigen::Index a = 0; a < np; ++a)
        for (Eigen::Index b = 0; b < np; ++b) out.covariance(a, b) = cov(perm[a], perm[b]);
    for (int k = 0; k < n_peaks; ++k) {
        const double var_a = out.covariance(3 + 3 * k, 3 + 3 * k);
        const double amp = out.peaks[static_cast<std::size_t>(k)].amplitude;
        const bool finite = out.covariance.allFinite();
        out.resolved.push_back(finite && var_a >= 0.0 && amp > 0.0 && amp > resolved_sigmas * std::sqrt(var_a));
    }

    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = out.model(nu[i]) - y[i];
        ss += e * e;
    }
    out.residual_rms = std::sqrt(ss / static_cast<double>(m));
    return out;
}

}  // namespace nvmux::fitting
