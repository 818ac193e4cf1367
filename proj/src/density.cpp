#include "lorentz/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lorentz/random.hpp"

namespace lorentz {

namespace {

// Antiderivative of exp(-1/u): u e^{-1/u} + Ei(-1/u).
double bump_primitive(double u) {
    if (u <= 0.0) return 0.0;
    return u * std::exp(-1.0 / u) + std::expint(-1.0 / u);
}

}  // namespace

std::string_view to_string(DensityKind kind) {
    return kind == DensityKind::uniform_disk ? "uniform-disk" : "smooth-bump";
}

DensityKind density_kind_from_string(std::string_view name) {
    if (name == "uniform-disk") return DensityKind::uniform_disk;
    if (name == "smooth-bump") return DensityKind::smooth_bump;
    throw std::invalid_argument("unknown density kind '" + std::string(name) + "'");
}

double bump_normalizer() {
    static const double z = std::numbers::pi * bump_primitive(1.0);
    return z;
}

const ObstacleDensity& ObstacleDensity::get(DensityKind kind) {
    static const ObstacleDensity uniform(DensityKind::uniform_disk);
    static const ObstacleDensity bump(DensityKind::smooth_bump);
    return kind == DensityKind::uniform_disk ? uniform : bump;
}

ObstacleDensity::ObstacleDensity(DensityKind kind) : kind_(kind) {
    if (kind_ == DensityKind::smooth_bump) {
        knot_cdf_.resize(kRadialKnots + 1);
        for (int i = 0; i <= kRadialKnots; ++i) {
            knot_cdf_[i] = radial_cdf(static_cast<double>(i) / kRadialKnots);
        }
        knot_cdf_.front() = 0.0;
        knot_cdf_.back() = 1.0;
    }
}

double ObstacleDensity::density_at_radius(double r) const {
    if (r < 0.0 || r > 1.0) return 0.0;
    if (kind_ == DensityKind::uniform_disk) return 1.0 / std::numbers::pi;
    if (r >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r * r)) / bump_normalizer();
}

double ObstacleDensity::radial_cdf(double r) const {
    if (r <= 0.0) return 0.0;
    if (r >= 1.0) return 1.0;
    if (kind_ == DensityKind::uniform_disk) return r * r;
    // Substituting u = 1 - s^2 turns the radial integral into pi * int e^{-1/u} du.
    const double a = 1.0 - r * r;
    return std::numbers::pi * (bump_primitive(1.0) - bump_primitive(a)) / bump_normalizer();
}

double ObstacleDensity::inverse_radial_cdf(double u) const {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    if (kind_ == DensityKind::uniform_disk) return std::sqrt(u);
    const auto it = std::upper_bound(knot_cdf_.begin(), knot_cdf_.end(), u);
    const auto i = static_cast<int>(std::distance(knot_cdf_.begin(), it)) - 1;
    const double c0 = knot_cdf_[i];
    const double c1 = knot_cdf_[i + 1];
    const double r0 = static_cast<double>(i) / kRadialKnots;
    const double r1 = static_cast<double>(i + 1) / kRadialKnots;
    const double w = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
    const double s = r0 * r0 + w * (r1 * r1 - r0 * r0);
    return std::min(1.0, std::sqrt(s));
}

Vec2 offset_at(const RealizationKey& key, const ObstacleDensity& density, const ScalingParams& params) {
    const rng::Counter ctr{static_cast<std::uint32_t>(key.cell.j), static_cast<std::uint32_t>(key.cell.k),
                           key.entry_index, static_cast<std::uint32_t>(rng::Tag::obstacle)};
    const rng::Counter out = rng::philox4x32(ctr, rng::key_of(key.seed));
    const Vec2 xi = sample_unit_disk(rng::to_unit(out[0], out[1]), rng::to_unit(out[2], out[3]), density);
    return xi * params.patch_radius;
}

Vec2 sample_unit_disk(double u1, double u2, const ObstacleDensity& density) {
    const double theta = 2.0 * std::numbers::pi * u1;
    const double r = density.inverse_radial_cdf(u2);
    return {r * std::cos(theta), r * std::sin(theta)};
}

double sample_exponential(double u, double rate) { return -std::log(u) / rate; }

}  // namespace lorentz
