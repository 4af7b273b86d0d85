#include "nvmux/fit_io.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "nvmux/csv.hpp"
#include "nvmux/errors.hpp"
#include "nvmux/format.hpp"

namespace nvmux::fitting {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            row.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

Spectrum read_spectrum_csv(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_data_line(is, line, line_no)) throw ParseError("empty spectrum file");
    const auto header = csv::split(line);
    if (header.size() != 2 || header[0] != "frequency_ghz" || header[1] != "counts")
        throw ParseError("expected header 'frequency_ghz,counts'", line_no);
    Spectrum s;
    while (csv::next_data_line(is, line, line_no)) {
        const auto fields = csv::split(line);
        double f = 0.0;
        double c = 0.0;
        if (fields.size() != 2 || !csv::parse_double(fields[0], f) || !csv::parse_double(fields[1], c))
            throw ParseError("malformed spectrum row '" + line + "'", line_no);
        s.frequency_ghz.push_back(f);
        s.counts.push_back(c);
    }
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ParseError(e.what());
    }
    return s;
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum) {
    os << "frequency_ghz,counts\n";
    for (std::size_t i = 0; i < spectrum.counts.size(); ++i)
        os << fmt_double(spectrum.frequency_ghz[i]) << ',' << fmt_double(spectrum.counts[i]) << '\n';
}

PsfImage read_psf_image(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_data_line(is, line, line_no)) throw ParseError("empty PSF image file");
    PsfImage img;
    bool have_px = false;
    bool have_x = false;
    bool have_y = false;
    for (const auto& kv : csv::split(line)) {
        const auto eq = kv.find('=');
        double v = 0.0;
        if (eq == std::string::npos || !csv::parse_double(std::string_view(kv).substr(eq + 1), v))
            throw ParseError("malformed metadata entry '" + kv + "'", line_no);
        const auto key = kv.substr(0, eq);
        if (key == "pixel_size_nm") img.pixel_size_nm = v, have_px = true;
        else if (key == "origin_x_nm") img.origin_x_nm = v, have_x = true;
        else if (key == "origin_y_nm") img.origin_y_nm = v, have_y = true;
        else throw ParseError("unknown metadata key '" + key + "'", line_no);
    }
    if (!(have_px && have_x && have_y))
        throw ParseError("metadata line needs pixel_size_nm, origin_x_nm and origin_y_nm", line_no);

    std::vector<std::vector<double>> rows;
    while (csv::next_data_line(is, line, line_no)) {
        std::vector<double> row;
        for (const auto& f : csv::split(line)) {
            double v = 0.0;
            if (!csv::parse_double(f, v)) throw ParseError("non-numeric count '" + f + "'", line_no);
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("ragged image row", line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("PSF image has no rows");
    img.counts.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            img.counts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    try {
        img.validate();
    } catch (const DomainError& e) {
        throw ParseError(e.what());
    }
    return img;
}

void write_psf_image(std::ostream& os, const PsfImage& image) {
    os << "pixel_size_nm=" << fmt_double(image.pixel_size_nm) << ",origin_x_nm=" << fmt_double(image.origin_x_nm)
       << ",origin_y_nm=" << fmt_double(image.origin_y_nm) << '\n';
    for (Eigen::Index r = 0; r < image.counts.rows(); ++r) {
        for (Eigen::Index c = 0; c < image.counts.cols(); ++c)
            os << (c ? "," : "") << fmt_double(image.counts(r, c));
        os << '\n';
    }
}

nlohmann::json to_json(const LorentzianFit& fit) {
    nlohmann::json peaks = nlohmann::json::array();
    for (std::size_t k = 0; k < fit.peaks.size(); ++k) {
        const auto base = static_cast<Eigen::Index>(1 + 3 * k);
        auto err = [&](Eigen::Index i) {
            const double v = fit.covariance(i, i);
            return std::isfinite(v) && v >= 0.0 ? nlohmann::json(std::sqrt(v)) : nlohmann::json(nullptr);
        };
        peaks.push_back({{"center_ghz", fit.peaks[k].center_ghz},
                         {"fwhm_ghz", fit.peaks[k].fwhm_ghz},
                         {"amplitude", fit.peaks[k].amplitude},
                         {"center_err_ghz", err(base)},
                         {"fwhm_err_ghz", err(base + 1)},
                         {"amplitude_err", err(base + 2)},
                         {"resolved", static_cast<bool>(fit.resolved[k])}});
    }
    return {{"model", "baseline + sum of Lorentzians"},
            {"n_peaks", fit.peaks.size()},
            {"baseline", fit.baseline},
            {"residual_rms", fit.residual_rms},
            {"iterations", fit.iterations},
            {"peaks", peaks},
            {"covariance_order", "baseline, then center_ghz, fwhm_ghz, amplitude per peak"},
            {"covariance", matrix_to_json(fit.covariance)}};
}

nlohmann::json to_json(const LocalizationResult& r) {
    return {{"model", "axis-aligned Gaussian PSF + offset"},
            {"center_nm", {r.fit.x_nm, r.fit.y_nm}},
            {"sigma_psf_nm", {r.fit.sigma_x_nm, r.fit.sigma_y_nm}},
            {"amplitude", r.fit.amplitude},
            {"offset", r.fit.offset},
            {"std_error_center_nm", {r.std_error_x_nm, r.std_error_y_nm}},
            {"precision_nm", r.precision_nm},
            {"residual_rms", r.residual_rms},
            {"iterations", r.iterations},
            {"covariance_order", "amplitude, x0, y0, sigma_x, sigma_y, offset"},
            {"covariance", matrix_to_json(r.covariance)}};
}

void write_residual_csv(std::ostream& os, const Spectrum& spectrum, const LorentzianFit& fit) {
    os << "frequency_ghz,counts,model,residual\n";
    for (std::size_t i = 0; i < spectrum.counts.size(); ++i) {
        const double m = fit.model(spectrum.frequency_ghz[i]);
        os << fmt_double(spectrum.frequency_ghz[i]) << ',' << fmt_double(spectrum.counts[i]) << ',' << fmt_double(m)
           << ',' << fmt_double(spectrum.counts[i] - m) << '\n';
    }
}

void write_residual_csv(std::ostream& os, const PsfImage& image, const LocalizationResult& result) {
    os << "row,col,x_nm,y_nm,counts,model,residual\n";
    for (Eigen::Index r = 0; r < image.counts.rows(); ++r)
        for (Eigen::Index c = 0; c < image.counts.cols(); ++c) {
            const double m = gaussian_psf(result.fit, image.x_at(c), image.y_at(r));
            os << r << ',' << c << ',' << fmt_double(image.x_at(c)) << ',' << fmt_double(image.y_at(r)) << ','
               << fmt_double(image.counts(r, c)) << ',' << fmt_double(m) << ',' << fmt_double(image.counts(r, c) - m)
               << '\n';
        }
}

}  // namespace nvmux::fitting
