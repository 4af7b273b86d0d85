#pragma once

#include <iosfwd>

#include <json.hpp>

#include "nvmux/psf.hpp"
#include "nvmux/spectrum.hpp"

namespace nvmux::fitting {

// CSV with header "frequency_ghz,counts". Lines starting with '#' are skipped.
// Throws ParseError naming the offending line.
Spectrum read_spectrum_csv(std::istream& is);
void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum);

// First line "pixel_size_nm=<f>,origin_x_nm=<f>,origin_y_nm=<f>", then one
// comma-separated row of counts per line.
PsfImage read_psf_image(std::istream& is);
void write_psf_image(std::ostream& os, const PsfImage& image);

nlohmann::json to_json(const LorentzianFit& fit);
nlohmann::json to_json(const LocalizationResult& result);

// "frequency_ghz,counts,model,residual"
void write_residual_csv(std::ostream& os, const Spectrum& spectrum, const LorentzianFit& fit);
// "row,col,x_nm,y_nm,counts,model,residual"
void write_residual_csv(std::ostream& os, const PsfImage& image, const LocalizationResult& result);

}  // namespace nvmux::fitting
