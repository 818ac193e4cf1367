#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "lorentz/density.hpp"
#include "lorentz/scaling.hpp"
#include "lorentz/vec2.hpp"

namespace lorentz {

enum class ProcessKind { lorentz, markovian, boltzmann };

std::string_view to_string(ProcessKind kind);
/// "lorentz" (alias "quenched"), "markovian", "boltzmann".
ProcessKind process_kind_from_string(std::string_view name);

/// Grazing intersections closer than this (micro units) are misses.
inline constexpr double kTolHit = 1e-12;
/// Collision guard per path.
inline constexpr std::uint64_t kMaxCollisions = 100'000'000;

struct PhaseState {
    Vec2 x;
    Vec2 v;
};

/// Entry distance along the ray to the first boundary crossing into the disk.
/// Empty for misses, tangents and origins inside the disk.
std::optional<double> ray_disk_intersect(Vec2 origin, Vec2 direction, Vec2 center, double radius);

/// v - 2 (omega . v) omega, renormalised. Throws NotIncomingError when v . omega >= 0.
Vec2 specular_reflect(Vec2 v, Vec2 omega);

/// Outward normal at the impact point for a ray with direction v hitting a unit
/// disk with impact parameter r in [-1, 1]: omega = -sqrt(1-r^2) v + r perp(v).
Vec2 normal_from_impact(Vec2 v, double r);

enum class EventKind { start, collision, end };

struct TrajectoryEvent {
    double t{0.0};
    Vec2 x;
    Vec2 v_after;
    EventKind kind{EventKind::start};
    std::optional<CellIndex> cell;     // collisions of the lattice processes
    double impact_parameter{0.0};      // collisions only
    std::uint32_t entry_index{0};      // range entry the collision belongs to
};

/// Piecewise-linear path with unit speed. Times and positions are stored in the
/// native scale of the process (micro for lorentz/markovian, macro for
/// boltzmann); `unit` converts native lengths to macro ones.
struct Trajectory {
    ProcessKind process{ProcessKind::lorentz};
    double unit{1.0};
    std::vector<TrajectoryEvent> events;

    double t_final() const { return events.back().t; }
    double t_final_macro() const { return events.back().t * unit; }
    std::size_t collision_count() const { return events.size() - 2; }

    /// Right-continuous state at macro time t (clamped to [0, t_final]).
    PhaseState state_at_macro(double t) const;
};

/// True when both trajectories have the same bit pattern in every field.
bool bitwise_equal(const Trajectory& a, const Trajectory& b);

/// A trajectory entering the range disk of a cell.
struct RangeVisit {
    CellIndex cell;
    double t{0.0};  // native units
    std::uint32_t entry_index{0};
};

/// Quenched Lorentz process. `start` and `t_max` are macroscopic; the
/// trajectory is stored in micro units. Optionally reports every range entry.
Trajectory advance_lorentz(const PhaseState& start, const ScalingParams& params, std::uint64_t seed,
                           const ObstacleDensity& density, double t_max,
                           std::vector<RangeVisit>* visits = nullptr);

/// Markovian Lorentz process: the obstacle of a cell is redrawn at every entry
/// into its range.
Trajectory advance_markovian(const PhaseState& start, const ScalingParams& params, std::uint64_t seed,
                             const ObstacleDensity& density, double t_max,
                             std::vector<RangeVisit>* visits = nullptr);

/// Dispatches on kind (lorentz or markovian).
Trajectory advance_lattice(ProcessKind kind, const PhaseState& start, const ScalingParams& params,
                           std::uint64_t seed, const ObstacleDensity& density, double t_max,
                           std::vector<RangeVisit>* visits = nullptr);

/// Random flight with exponential(rate) waiting times and specular kernel.
/// Everything macroscopic.
Trajectory advance_boltzmann(const PhaseState& start, double rate, double t_max, std::uint64_t seed);

struct LoopEvent {
    double t_macro{0.0};
    CellIndex cell;
    std::uint32_t entry_index{0};
};

struct LoopReport {
    std::vector<LoopEvent> loop_events;
    /// Per loop event, the cell displacements xi_1..xi_{n+1}; they sum to zero.
    std::vector<std::vector<CellIndex>> displacement_sequences;

    bool empty() const { return loop_events.empty(); }
};

/// Replays a lattice trajectory and reports every re-entry into an obstacle
/// range. Throws InconsistentError when the replay does not reproduce the
/// stored events within 1e-9 micro units.
LoopReport detect_loops(const Trajectory& trajectory, const ScalingParams& params, std::uint64_t seed,
                        const ObstacleDensity& density);

struct PairResult {
    Trajectory first;
    Trajectory second;
    bool met_same_range{false};
    std::optional<double> first_meet_time;  // macro
};

/// Stream id used to derive the per-particle seeds of a Markovian pair.
inline constexpr std::uint64_t kPairStream = 0x9A12;

/// Two particles in one realisation (lorentz) or with independent resampling
/// streams derive_seed(seed, kPairStream, 0 / 1) (markovian).
PairResult run_pair(const PhaseState& start1, const PhaseState& start2, ProcessKind process,
                    const ScalingParams& params, std::uint64_t seed, const ObstacleDensity& density,
                    double t_max);

/// One CSV row per event, macro units, 17 significant digits. Writes the header
/// when `header` is set.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, std::uint64_t path_id,
                          bool header);

}  // namespace lorentz
