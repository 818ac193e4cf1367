#pragma once

// Cell-by-cell walk along a straight segment, shared by the simulators and by
// the loop detector so that both see exactly the same range entries.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "lorentz/density.hpp"
#include "lorentz/dynamics.hpp"
#include "lorentz/scaling.hpp"

namespace lorentz::detail {

struct Hit {
    CellIndex cell;
    std::uint32_t entry_index{0};
    double s{0.0};
    Vec2 obstacle;
};

class RangeTracker {
public:
    RangeTracker(const ScalingParams& params, std::uint64_t seed, const ObstacleDensity& density,
                 bool resample, std::vector<RangeVisit>* visits)
        : params_(params), seed_(seed), density_(density), resample_(resample), visits_(visits),
          r2_(params.range_radius * params.range_radius) {
        counts_.reserve(256);
    }

    /// Walks [0, length] from x along unit v, t0 being the native time at x.
    /// Returns the first obstacle hit strictly before `length`.
    std::optional<Hit> walk(Vec2 x, Vec2 v, double t0, double length) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        CellIndex c = cell_of(x);
        int step_x = 0;
        int step_y = 0;
        double next_x = inf;
        double next_y = inf;
        double delta_x = inf;
        double delta_y = inf;
        if (v.x > 0.0) {
            step_x = 1;
            next_x = (static_cast<double>(c.j) + 0.5 - x.x) / v.x;
            delta_x = 1.0 / v.x;
        } else if (v.x < 0.0) {
            step_x = -1;
            next_x = (static_cast<double>(c.j) - 0.5 - x.x) / v.x;
            delta_x = -1.0 / v.x;
        }
        if (v.y > 0.0) {
            step_y = 1;
            next_y = (static_cast<double>(c.k) + 0.5 - x.y) / v.y;
            delta_y = 1.0 / v.y;
        } else if (v.y < 0.0) {
            step_y = -1;
            next_y = (static_cast<double>(c.k) - 0.5 - x.y) / v.y;
            delta_y = -1.0 / v.y;
        }

        const std::optional<CellIndex> inside = inside_;
        inside_.reset();
        for (;;) {
            const Vec2 rel = cell_center(c) - x;
            const double h = cross(v, rel);
            if (h * h < r2_) {
                const double sc = dot(rel, v);
                const double w = std::sqrt(r2_ - h * h);
                const bool continued = inside && *inside == c;
                if (sc + w > 0.0 && sc - w < length) {
                    std::uint32_t idx;
                    if (continued) {
                        idx = inside_index_;
                    } else {
                        idx = counts_[c]++;
                        if (visits_) visits_->push_back({c, t0 + std::max(0.0, sc - w), idx});
                    }
                    const RealizationKey key{seed_, c, resample_ ? idx : 0u};
                    const Vec2 o = cell_center(c) + offset_at(key, density_, params_);
                    const auto s = ray_disk_intersect(x, v, o, params_.sqrt_eps);
                    if (s && *s < length) {
                        inside_ = c;
                        inside_index_ = idx;
                        return Hit{c, idx, *s, o};
                    }
                }
            }
            if (next_x < next_y) {
                if (next_x >= length) break;
                c.j += step_x;
                next_x += delta_x;
            } else {
                if (next_y >= length) break;
                c.k += step_y;
                next_y += delta_y;
            }
        }
        return std::nullopt;
    }

private:
    const ScalingParams& params_;
    std::uint64_t seed_;
    const ObstacleDensity& density_;
    bool resample_;
    std::vector<RangeVisit>* visits_;
    double r2_;
    std::unordered_map<CellIndex, std::uint32_t, CellIndexHash> counts_;
    std::optional<CellIndex> inside_;
    std::uint32_t inside_index_{0};
};

}  // namespace lorentz::detail
