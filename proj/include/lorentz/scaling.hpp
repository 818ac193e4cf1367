#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>

#include "lorentz/vec2.hpp"

namespace lorentz {

enum class Scale { micro, macro };

/// Two-scale parameterisation of the perturbed lattice.
///
/// Microscopic scale: lattice spacing 1, obstacle radius sqrt(eps), obstacle
/// centres within eps^(1-nu) of their lattice point. Macroscopic lengths and
/// times are sqrt(eps) times the microscopic ones (unit speed in both scales).
struct ScalingParams {
    double epsilon{};
    double nu{};
    double sqrt_eps{};         ///< micro obstacle radius == macro lattice spacing
    double patch_radius{};     ///< micro, eps^(1-nu)
    double range_radius{};     ///< micro, patch + obstacle radius

    double obstacle_radius() const { return sqrt_eps; }
    double macro_spacing() const { return sqrt_eps; }
    double macro_obstacle_radius() const { return epsilon; }
    double macro_patch_radius() const { return sqrt_eps * patch_radius; }
    double macro_range_radius() const { return sqrt_eps * range_radius; }

    double to_macro(double micro_length) const { return micro_length * sqrt_eps; }
    double to_micro(double macro_length) const { return macro_length / sqrt_eps; }
    Vec2 to_macro(Vec2 p) const { return p * sqrt_eps; }
    Vec2 to_micro(Vec2 p) const { return {p.x / sqrt_eps, p.y / sqrt_eps}; }
};

/// Validates raw user input and derives all lengths.
/// Throws ParamError(out_of_range) unless 0 < eps < 1 and 1/2 < nu < 1, and
/// ParamError(range_overflow) when the obstacle range does not fit in half a cell.
ScalingParams validate_params(double epsilon, double nu);

/// Lattice cell, the unit square centred at (j, k) in microscopic units.
struct CellIndex {
    std::int64_t j{0};
    std::int64_t k{0};

    auto operator<=>(const CellIndex&) const = default;
};

struct CellIndexHash {
    std::size_t operator()(const CellIndex& c) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(c.j) * 0x9E3779B97F4A7C15ULL;
        h ^= static_cast<std::uint64_t>(c.k) + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

/// Nearest lattice point, ties rounded half-up componentwise.
CellIndex cell_of(Vec2 micro_point);
CellIndex cell_of(Vec2 point, Scale scale, const ScalingParams& params);

inline Vec2 cell_center(CellIndex c) {
    return {static_cast<double>(c.j), static_cast<double>(c.k)};
}

/// One of the eight symmetries of the square: optional swap of the axes
/// followed by optional sign flips.
struct Dihedral {
    bool swap_axes{false};
    bool negate_x{false};
    bool negate_y{false};

    Vec2 apply(Vec2 p) const {
        Vec2 q = swap_axes ? Vec2{p.y, p.x} : p;
        if (negate_x) q.x = -q.x;
        if (negate_y) q.y = -q.y;
        return q;
    }

    Dihedral inverse() const {
        if (!swap_axes) return *this;
        return {true, negate_y, negate_x};
    }

    /// Index in [0, 8).
    int code() const { return (swap_axes ? 4 : 0) | (negate_x ? 2 : 0) | (negate_y ? 1 : 0); }
    static Dihedral from_code(int code) { return {(code & 4) != 0, (code & 2) != 0, (code & 1) != 0}; }

    bool operator==(const Dihedral&) const = default;
};

/// The symmetry mapping `direction` to (sin b, cos b) with b in [0, pi/4].
/// Ties (directions on a symmetry axis) resolve to the lowest code.
Dihedral canonical_symmetry(Vec2 direction);

/// One traversal of a lattice cell in the canonical frame (direction upward,
/// tilted clockwise by beta in [0, pi/4] from the vertical).
///
/// `y` is where the path line crosses the cell's lower edge line, measured from
/// the edge midpoint. It lies in [-1/2, 1/2) when the path enters through the
/// lower edge and below -1/2 when it enters through the left edge.
/// `rho` = (y - y0) cos(beta), y0 = -tan(beta)/2, is the signed distance from
/// the cell centre to the path line (positive when the centre is to the left).
struct CellCrossing {
    double y{};
    double beta{};
    double rho{};
    Dihedral symmetry{};
    std::uint32_t entry_index{0};
};

/// Throws NoEntryError when the ray from `origin` never meets the closed cell.
CellCrossing crossing_coordinates(Vec2 origin, Vec2 direction, CellIndex cell,
                                  std::uint32_t entry_index);

inline double crossing_y0(double beta) { return -0.5 * std::tan(beta); }

/// Wraps into [-1/2, 1/2).
double wrap_half(double y);

/// y_k = -1/2 + (1/2 + y_1 + (k-1) tan(beta) mod 1), k >= 1.
double lower_edge_entry(double y1, double beta, std::int64_t k);

}  // namespace lorentz

template <>
struct std::hash<lorentz::CellIndex> : lorentz::CellIndexHash {};
