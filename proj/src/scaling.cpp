#include "lorentz/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lorentz/errors.hpp"

namespace lorentz {

ScalingParams validate_params(double epsilon, double nu) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        std::ostringstream os;
        os << "epsilon must lie in (0, 1), got " << epsilon;
        throw ParamError(ParamError::Kind::out_of_range, os.str());
    }
    if (!(nu > 0.5 && nu < 1.0)) {
        std::ostringstream os;
        os << "nu must lie in (1/2, 1), got " << nu;
        throw ParamError(ParamError::Kind::out_of_range, os.str());
    }
    ScalingParams p;
    p.epsilon = epsilon;
    p.nu = nu;
    p.sqrt_eps = std::sqrt(epsilon);
    p.patch_radius = std::pow(epsilon, 1.0 - nu);
    p.range_radius = p.patch_radius + p.sqrt_eps;
    if (p.range_radius > 0.5) {
        std::ostringstream os;
        os << "obstacle range radius eps^(1-nu) + sqrt(eps) = " << p.range_radius
           << " exceeds 1/2 (epsilon=" << epsilon << ", nu=" << nu << ")";
        throw ParamError(ParamError::Kind::range_overflow, os.str());
    }
    return p;
}

CellIndex cell_of(Vec2 p) {
    return {static_cast<std::int64_t>(std::floor(p.x + 0.5)),
            static_cast<std::int64_t>(std::floor(p.y + 0.5))};
}

CellIndex cell_of(Vec2 point, Scale scale, const ScalingParams& params) {
    if (scale == Scale::micro) return cell_of(point);
    return cell_of(params.to_micro(point));
}

Dihedral canonical_symmetry(Vec2 d) {
    for (int code = 0; code < 8; ++code) {
        const Dihedral op = Dihedral::from_code(code);
        const Vec2 q = op.apply(d);
        if (q.y > 0.0 && q.x >= 0.0 && q.x <= q.y) return op;
    }
    // Only reachable for a zero or non-finite direction.
    return {};
}

CellCrossing crossing_coordinates(Vec2 origin, Vec2 direction, CellIndex cell,
                                  std::uint32_t entry_index) {
    const Dihedral op = canonical_symmetry(direction);
    const Vec2 p = op.apply(origin - cell_center(cell));
    const Vec2 d = op.apply(direction);
    if (!(d.y > 0.0)) throw NoEntryError("crossing_coordinates: degenerate direction");

    // Slab test against [-1/2, 1/2]^2 for s >= 0.
    double s_lo = 0.0;
    double s_hi = std::numeric_limits<double>::infinity();
    const double pc[2] = {p.x, p.y};
    const double dc[2] = {d.x, d.y};
    for (int a = 0; a < 2; ++a) {
        if (dc[a] == 0.0) {
            if (pc[a] < -0.5 || pc[a] > 0.5) throw NoEntryError("crossing_coordinates: ray misses the cell");
            continue;
        }
        double s0 = (-0.5 - pc[a]) / dc[a];
        double s1 = (0.5 - pc[a]) / dc[a];
        if (s0 > s1) std::swap(s0, s1);
        s_lo = std::max(s_lo, s0);
        s_hi = std::min(s_hi, s1);
    }
    if (s_lo > s_hi) throw NoEntryError("crossing_coordinates: ray misses the cell");

    CellCrossing c;
    c.symmetry = op;
    c.entry_index = entry_index;
    c.beta = std::atan2(d.x, d.y);
    c.y = p.x + d.x * (-0.5 - p.y) / d.y;
    c.rho = (c.y - crossing_y0(c.beta)) * std::cos(c.beta);
    return c;
}

double wrap_half(double y) {
    double w = y - std::floor(y + 0.5);
    if (w >= 0.5) w -= 1.0;
    return w;
}

double lower_edge_entry(double y1, double beta, std::int64_t k) {
    const double shifted = 0.5 + y1 + static_cast<double>(k - 1) * std::tan(beta);
    double frac = shifted - std::floor(shifted);
    if (frac >= 1.0) frac -= 1.0;
    return -0.5 + frac;
}

}  // namespace lorentz
