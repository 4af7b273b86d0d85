#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>

#include "nvmux/ensemble.hpp"
#include "nvmux/errors.hpp"
#include "nvmux/format.hpp"

namespace nvmux::ensemble {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014327;

}  // namespace

KernelDensityModel::KernelDensityModel(std::vector<double> points_ghz, double bandwidth_ghz, std::vector<double> weights)
    : points_(std::move(points_ghz)), weights_(std::move(weights)), bandwidth_(bandwidth_ghz) {
    if (points_.empty()) throw DomainError("KDE needs at least one sample");
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) throw DomainError("KDE bandwidth must be positive");
    for (double p : points_)
        if (!std::isfinite(p)) throw DomainError("non-finite KDE sample");
    if (weights_.empty()) {
        weights_.assign(points_.size(), 1.0 / static_cast<double>(points_.size()));
        return;
    }
    if (weights_.size() != points_.size()) throw DomainError("KDE weight count differs from sample count");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("KDE weights must be non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw DomainError("KDE weights sum to zero");
    cumulative_.reserve(weights_.size());
    double acc = 0.0;
    for (double& w : weights_) {
        w /= total;
        acc += w;
        cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;
}

double KernelDensityModel::density(double nu) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const double z = (nu - points_[i]) / bandwidth_;
        sum += weights_[i] * std::exp(-0.5 * z * z);
    }
    return sum * inv_sqrt_2pi / bandwidth_;
}

double KernelDensityModel::cdf(double nu) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i)
        sum += weights_[i] * 0.5 * std::erfc(-(nu - points_[i]) / (bandwidth_ * std::numbers::sqrt2));
    return sum;
}

double KernelDensityModel::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) m += weights_[i] * points_[i];
    return m;
}

double KernelDensityModel::stddev() const {
    const double m = mean();
    double v = bandwidth_ * bandwidth_;
    for (std::size_t i = 0; i < points_.size(); ++i) v += weights_[i] * (points_[i] - m) * (points_[i] - m);
    return std::sqrt(v);
}

double KernelDensityModel::integral_quadrature() const {
    const auto [lo_it, hi_it] = std::minmax_element(points_.begin(), points_.end());
    const double lo = *lo_it - 8.0 * bandwidth_;
    const double hi = *hi_it + 8.0 * bandwidth_;
    const double target_step = bandwidth_ / 20.0;
    auto intervals = static_cast<std::size_t>(std::ceil((hi - lo) / target_step));
    intervals += intervals % 2;
    const double h = (hi - lo) / static_cast<double>(intervals);
    double sum = density(lo) + density(hi);
    for (std::size_t i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * density(lo + h * static_cast<double>(i));
    return sum * h / 3.0;
}

double KernelDensityModel::draw(rng::Philox4x32& g) const {
    std::size_t idx;
    if (cumulative_.empty()) {
        idx = static_cast<std::size_t>(rng::uniform_index(g, points_.size()));
    } else {
        const double u = rng::uniform_open(g);
        idx = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
        idx = std::min(idx, points_.size() - 1);
    }
    return points_[idx] + bandwidth_ * rng::standard_normal(g);
}

double silverman_bandwidth(const std::vector<double>& x) {
    if (x.size() < 2) throw DomainError("automatic bandwidth needs at least 2 samples");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
    const double h = 1.06 * sd * std::pow(static_cast<double>(x.size()), -0.2);
    if (!(h > 0.0)) throw DomainError("automatic bandwidth is zero: all samples coincide");
    return h;
}

KernelDensityModel kde_fit(const ZplDataset& data, std::optional<double> bandwidth_ghz, SiteWeighting weighting) {
    data.validate();
    if (bandwidth_ghz && !(*bandwidth_ghz > 0.0)) throw DomainError("explicit bandwidth must be positive");
    const double h = bandwidth_ghz ? *bandwidth_ghz : silverman_bandwidth(data.frequency_ghz);
    if (weighting == SiteWeighting::PerTransition) return KernelDensityModel(data.frequency_ghz, h);

    if (data.site_ids.empty()) throw DomainError("per-site weighting needs site ids");
    std::map<std::string, std::size_t> per_site;
    for (const auto& s : data.site_ids) ++per_site[s];
    std::vector<double> w;
    w.reserve(data.site_ids.size());
    for (const auto& s : data.site_ids) w.push_back(1.0 / static_cast<double>(per_site[s]));
    return KernelDensityModel(data.frequency_ghz, h, std::move(w));
}

std::vector<double> sample(const KernelDensityModel& model, std::uint64_t seed, std::size_t n) {
    if (n < 1) throw DomainError("sample count must be >= 1");
    rng::Philox4x32 g(seed, 0);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(model.draw(g));
    return out;
}

nlohmann::json to_json(const KernelDensityModel& model) {
    nlohmann::json doc = {{"kernel", "gaussian"}, {"bandwidth_ghz", model.bandwidth()}, {"samples_ghz", model.points()}};
    const double uniform = 1.0 / static_cast<double>(model.points().size());
    const bool non_uniform = std::any_of(model.weights().begin(), model.weights().end(),
                                         [&](double w) { return std::abs(w - uniform) > 1e-15; });
    if (non_uniform) doc["weights"] = model.weights();
    return doc;
}

KernelDensityModel kde_from_json(const nlohmann::json& doc) {
    try {
        std::vector<double> w;
        if (doc.contains("weights")) w = doc.at("weights").get<std::vector<double>>();
        return KernelDensityModel(doc.at("samples_ghz").get<std::vector<double>>(), doc.at("bandwidth_ghz").get<double>(),
                                  std::move(w));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("KDE document: ") + e.what());
    }
}

void write_density_csv(std::ostream& os, const KernelDensityModel& model, double lo, double hi, std::size_t points) {
    if (points < 2 || !(hi > lo)) throw DomainError("density grid needs >= 2 points over a non-empty range");
    os << "frequency_ghz,density_per_ghz\n";
    for (std::size_t i = 0; i < points; ++i) {
        const double nu = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        os << fmt_double(nu) << ',' << fmt_double(model.density(nu)) << '\n';
    }
}

}  // namespace nvmux::ensemble
