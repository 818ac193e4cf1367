#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "lorentz/scaling.hpp"
#include "lorentz/vec2.hpp"

namespace lorentz {

enum class DensityKind { uniform_disk, smooth_bump };

std::string_view to_string(DensityKind kind);
/// Accepts "uniform-disk" and "smooth-bump"; throws std::invalid_argument otherwise.
DensityKind density_kind_from_string(std::string_view name);

/// Rotationally symmetric probability density on the closed unit disk, the law
/// of the normalised obstacle offset.
///
/// uniform-disk: constant 1/pi. Not smooth at |x| = 1.
/// smooth-bump:  exp(-1/(1-|x|^2)) / Z for |x| < 1, with
///               Z = pi (e^{-1} + Ei(-1)).
///
/// Instances are immutable and shared; obtain them with get().
class ObstacleDensity {
public:
    static constexpr int kRadialKnots = 2048;

    static const ObstacleDensity& get(DensityKind kind);

    DensityKind kind() const { return kind_; }

    /// Planar density at any point of radius r.
    double density_at_radius(double r) const;

    /// P(|xi| <= r), closed form.
    double radial_cdf(double r) const;

    /// Inverse of radial_cdf. Exact for uniform-disk; monotone interpolation
    /// in r^2 between kRadialKnots+1 knots for smooth-bump.
    double inverse_radial_cdf(double u) const;

private:
    explicit ObstacleDensity(DensityKind kind);

    DensityKind kind_;
    std::vector<double> knot_cdf_;  // radial_cdf at r_i = i / kRadialKnots
};

/// Normaliser of the smooth bump, pi (e^{-1} + Ei(-1)).
double bump_normalizer();

/// Identifies one obstacle draw: the quenched field uses entry_index 0 in every
/// cell; the Markovian process draws a fresh offset per range entry.
struct RealizationKey {
    std::uint64_t seed{0};
    CellIndex cell{};
    std::uint32_t entry_index{0};
};

/// Obstacle-centre offset from the cell centre, micro units, |offset| <= eps^(1-nu).
/// Cells are addressed by the low 32 bits of each index.
Vec2 offset_at(const RealizationKey& key, const ObstacleDensity& density, const ScalingParams& params);

/// Point of the unit disk: angle 2 pi u1, radius inverse_radial_cdf(u2).
Vec2 sample_unit_disk(double u1, double u2, const ObstacleDensity& density);

/// Uniform impact parameter on [-1, 1].
inline double sample_impact_parameter(double u) { return 2.0 * u - 1.0; }

/// Exponential waiting time, u in (0, 1].
double sample_exponential(double u, double rate);

}  // namespace lorentz
