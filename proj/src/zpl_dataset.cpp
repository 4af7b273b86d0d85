#include <cmath>
#include <istream>
#include <ostream>

#include "nvmux/csv.hpp"
#include "nvmux/ensemble.hpp"
#include "nvmux/errors.hpp"
#include "nvmux/format.hpp"

namespace nvmux::ensemble {

void ZplDataset::validate() const {
    if (frequency_ghz.empty()) throw DomainError("ZPL dataset is empty");
    if (!site_ids.empty() && site_ids.size() != frequency_ghz.size())
        throw DomainError("site id column length differs from frequency column");
    for (double f : frequency_ghz)
        if (!std::isfinite(f)) throw DomainError("non-finite ZPL frequency");
}

ZplDataset load_zpl_dataset(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_data_line(is, line, line_no)) throw ParseError("empty ZPL dataset file");
    const auto header = csv::split(line);
    const bool with_sites = header.size() == 2 && header[0] == "frequency_ghz" && header[1] == "site_id";
    if (!with_sites && !(header.size() == 1 && header[0] == "frequency_ghz"))
        throw ParseError("expected header 'frequency_ghz' or 'frequency_ghz,site_id'", line_no);

    ZplDataset d;
    while (csv::next_data_line(is, line, line_no)) {
        const auto fields = csv::split(line);
        double f = 0.0;
        if (fields.size() != header.size() || !csv::parse_double(fields[0], f))
            throw ParseError("malformed ZPL row '" + line + "'", line_no);
        d.frequency_ghz.push_back(f);
        if (with_sites) d.site_ids.push_back(fields[1]);
    }
    if (d.frequency_ghz.empty()) throw ParseError("ZPL dataset has a header but no rows");
    return d;
}

void write_zpl_dataset(std::ostream& os, const ZplDataset& data) {
    const bool sites = !data.site_ids.empty();
    os << (sites ? "frequency_ghz,site_id\n" : "frequency_ghz\n");
    for (std::size_t i = 0; i < data.frequency_ghz.size(); ++i) {
        os << fmt_double(data.frequency_ghz[i]);
        if (sites) os << ',' << data.site_ids[i];
        os << '\n';
    }
}

SummaryStats summary_stats(const ZplDataset& data) {
    data.validate();
    const auto n = data.frequency_ghz.size();
    double mean = 0.0;
    for (double f : data.frequency_ghz) mean += f;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double f : data.frequency_ghz) ss += (f - mean) * (f - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    return {mean, sd, n};
}

ZplDataset gaussian_surrogate(const SurrogateSpec& spec, std::uint64_t seed, double center_ghz) {
    rng::Philox4x32 g(seed, 0);
    ZplDataset d;
    d.frequency_ghz.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i)
        d.frequency_ghz.push_back(center_ghz + spec.sigma_ghz * rng::standard_normal(g));
    return d;
}

const SurrogateSpec& surrogate_by_name(const std::string& name) {
    if (name == pcd_surrogate.name) return pcd_surrogate;
    if (name == scd_surrogate.name) return scd_surrogate;
    throw DomainError("unknown surrogate '" + name + "' (expected 'pcd' or 'scd')");
}

}  // namespace nvmux::ensemble
