#include "lorentz/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

#include "lorentz/errors.hpp"
#include "lorentz/random.hpp"
#include "traversal.hpp"

namespace lorentz {

std::string_view to_string(ProcessKind kind) {
    switch (kind) {
        case ProcessKind::lorentz: return "lorentz";
        case ProcessKind::markovian: return "markovian";
        case ProcessKind::boltzmann: return "boltzmann";
    }
    return "?";
}

ProcessKind process_kind_from_string(std::string_view name) {
    if (name == "lorentz" || name == "quenched") return ProcessKind::lorentz;
    if (name == "markovian") return ProcessKind::markovian;
    if (name == "boltzmann") return ProcessKind::boltzmann;
    throw std::invalid_argument("unknown process '" + std::string(name) + "'");
}

std::optional<double> ray_disk_intersect(Vec2 origin, Vec2 direction, Vec2 center, double radius) {
    const Vec2 f = origin - center;
    const double c = dot(f, f) - radius * radius;
    if (c < 0.0) return std::nullopt;
    const double b = dot(f, direction);
    if (b >= 0.0) return std::nullopt;
    const double disc = b * b - c;
    if (disc <= 0.0) return std::nullopt;
    // Smaller root of s^2 + 2bs + c, in the cancellation-free form.
    const double s = c / (-b + std::sqrt(disc));
    if (!(s > kTolHit)) return std::nullopt;
    return s;
}

Vec2 specular_reflect(Vec2 v, Vec2 omega) {
    const double vn = dot(v, omega);
    if (!(vn < 0.0)) throw NotIncomingError("specular_reflect: velocity is not incoming");
    return normalized(v - omega * (2.0 * vn));
}

Vec2 normal_from_impact(Vec2 v, double r) {
    const double c = std::sqrt(std::max(0.0, 1.0 - r * r));
    return v * (-c) + perp(v) * r;
}

PhaseState Trajectory::state_at_macro(double t) const {
    const double tn = std::clamp(t / unit, 0.0, t_final());
    auto it = std::upper_bound(events.begin(), events.end(), tn,
                               [](double value, const TrajectoryEvent& e) { return value < e.t; });
    const TrajectoryEvent& e = (it == events.begin()) ? events.front() : *std::prev(it);
    const Vec2 x = e.x + e.v_after * (tn - e.t);
    return {x * unit, e.v_after};
}

namespace {

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(Vec2 a, Vec2 b) { return same_bits(a.x, b.x) && same_bits(a.y, b.y); }

TrajectoryEvent make_event(double t, Vec2 x, Vec2 v, EventKind kind) {
    TrajectoryEvent e;
    e.t = t;
    e.x = x;
    e.v_after = v;
    e.kind = kind;
    return e;
}

Trajectory simulate_lattice(ProcessKind kind, const PhaseState& start, const ScalingParams& params,
                            std::uint64_t seed, const ObstacleDensity& density, double t_max,
                            std::vector<RangeVisit>* visits) {
    Trajectory traj;
    traj.process = kind;
    traj.unit = params.sqrt_eps;
    const double horizon = params.to_micro(t_max);
    Vec2 x = params.to_micro(start.x);
    Vec2 v = normalized(start.v);
    double t = 0.0;
    traj.events.push_back(make_event(0.0, x, v, EventKind::start));

    detail::RangeTracker tracker(params, seed, density, kind == ProcessKind::markovian, visits);
    std::uint64_t collisions = 0;
    for (;;) {
        const double remaining = horizon - t;
        const auto hit = tracker.walk(x, v, t, remaining);
        if (!hit) {
            traj.events.push_back(make_event(horizon, x + v * remaining, v, EventKind::end));
            break;
        }
        if (++collisions > kMaxCollisions) {
            throw StepLimitError("more than " + std::to_string(kMaxCollisions) + " collisions on one path");
        }
        t += hit->s;
        x = x + v * hit->s;
        const Vec2 rel = x - hit->obstacle;
        const Vec2 omega = normalized(rel);
        const double r = std::clamp(dot(rel, perp(v)) / params.sqrt_eps, -1.0, 1.0);
        // A numerically tangent hit leaves the velocity unchanged.
        if (dot(v, omega) < 0.0) v = specular_reflect(v, omega);
        TrajectoryEvent e = make_event(t, x, v, EventKind::collision);
        e.cell = hit->cell;
        e.impact_parameter = r;
        e.entry_index = hit->entry_index;
        traj.events.push_back(e);
    }
    return traj;
}

}  // namespace

bool bitwise_equal(const Trajectory& a, const Trajectory& b) {
    if (a.process != b.process || !same_bits(a.unit, b.unit) || a.events.size() != b.events.size()) return false;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        const TrajectoryEvent& p = a.events[i];
        const TrajectoryEvent& q = b.events[i];
        if (!same_bits(p.t, q.t) || !same_bits(p.x, q.x) || !same_bits(p.v_after, q.v_after) || p.kind != q.kind ||
            p.cell != q.cell || p.entry_index != q.entry_index || !same_bits(p.impact_parameter, q.impact_parameter)) {
            return false;
        }
    }
    return true;
}

Trajectory advance_lorentz(const PhaseState& start, const ScalingParams& params, std::uint64_t seed,
                           const ObstacleDensity& density, double t_max, std::vector<RangeVisit>* visits) {
    return simulate_lattice(ProcessKind::lorentz, start, params, seed, density, t_max, visits);
}

Trajectory advance_markovian(const PhaseState& start, const ScalingParams& params, std::uint64_t seed,
                             const ObstacleDensity& density, double t_max, std::vector<RangeVisit>* visits) {
    return simulate_lattice(ProcessKind::markovian, start, params, seed, density, t_max, visits);
}

Trajectory advance_lattice(ProcessKind kind, const PhaseState& start, const ScalingParams& params,
                           std::uint64_t seed, const ObstacleDensity& density, double t_max,
                           std::vector<RangeVisit>* visits) {
    if (kind == ProcessKind::boltzmann) throw std::invalid_argument("advance_lattice: boltzmann has no lattice");
    return simulate_lattice(kind, start, params, seed, density, t_max, visits);
}

Trajectory advance_boltzmann(const PhaseState& start, double rate, double t_max, std::uint64_t seed) {
    Trajectory traj;
    traj.process = ProcessKind::boltzmann;
    traj.unit = 1.0;
    Vec2 x = start.x;
    Vec2 v = normalized(start.v);
    double t = 0.0;
    traj.events.push_back(make_event(0.0, x, v, EventKind::start));
    rng::Stream stream(seed, 0, 0, rng::Tag::boltzmann);
    for (;;) {
        const double dt = sample_exponential(stream.uniform_pos(), rate);
        if (t + dt >= t_max) break;
        t += dt;
        x = x + v * dt;
        const double r = sample_impact_parameter(stream.uniform());
        if (std::abs(r) < 1.0) v = specular_reflect(v, normal_from_impact(v, r));
        TrajectoryEvent e = make_event(t, x, v, EventKind::collision);
        e.impact_parameter = r;
        traj.events.push_back(e);
    }
    traj.events.push_back(make_event(t_max, x + v * (t_max - t), v, EventKind::end));
    return traj;
}

LoopReport detect_loops(const Trajectory& trajectory, const ScalingParams& params, std::uint64_t seed,
                        const ObstacleDensity& density) {
    if (trajectory.process == ProcessKind::boltzmann) {
        throw InconsistentError("detect_loops: boltzmann trajectories carry no obstacle geometry");
    }
    constexpr double tol = 1e-9;
    const auto& ev = trajectory.events;
    if (ev.size() < 2 || ev.front().kind != EventKind::start || ev.back().kind != EventKind::end) {
        throw InconsistentError("detect_loops: malformed trajectory");
    }

    std::vector<RangeVisit> visits;
    detail::RangeTracker tracker(params, seed, density, trajectory.process == ProcessKind::markovian, &visits);
    for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
        const TrajectoryEvent& a = ev[i];
        const TrajectoryEvent& b = ev[i + 1];
        const double len = b.t - a.t;
        if (!(len >= 0.0)) throw InconsistentError("detect_loops: event times decrease");
        if (norm(a.x + a.v_after * len - b.x) > tol) {
            throw InconsistentError("detect_loops: positions inconsistent at event " + std::to_string(i + 1));
        }
        const bool expect_hit = b.kind == EventKind::collision;
        const auto hit = tracker.walk(a.x, a.v_after, a.t, expect_hit ? len + tol : len);
        if (expect_hit) {
            if (!hit || std::abs(hit->s - len) > tol || !b.cell || *b.cell != hit->cell) {
                throw InconsistentError("detect_loops: replay misses collision " + std::to_string(i + 1));
            }
            if (std::abs(norm(b.x - hit->obstacle) - params.sqrt_eps) > tol) {
                throw InconsistentError("detect_loops: collision point off its obstacle");
            }
        } else if (hit && hit->s < len - tol) {
            throw InconsistentError("detect_loops: replay finds a collision the trajectory lacks");
        }
    }

    // Collision cells in time order.
    std::vector<std::pair<double, CellIndex>> hits;
    for (const auto& e : ev) {
        if (e.kind == EventKind::collision) hits.emplace_back(e.t, *e.cell);
    }

    LoopReport report;
    std::map<CellIndex, double> last_entry;
    for (const RangeVisit& rv : visits) {
        auto prev = last_entry.find(rv.cell);
        if (rv.entry_index >= 1 && prev != last_entry.end()) {
            report.loop_events.push_back({rv.t * trajectory.unit, rv.cell, rv.entry_index});
            std::vector<CellIndex> path{rv.cell};
            for (const auto& [t, c] : hits) {
                if (t < prev->second) continue;
                if (t >= rv.t) break;
                if (c != path.back()) path.push_back(c);
            }
            if (path.back() != rv.cell) path.push_back(rv.cell);
            std::vector<CellIndex> xi;
            for (std::size_t k = 1; k < path.size(); ++k) {
                xi.push_back({path[k].j - path[k - 1].j, path[k].k - path[k - 1].k});
            }
            report.displacement_sequences.push_back(std::move(xi));
        }
        last_entry[rv.cell] = rv.t;
    }
    return report;
}

PairResult run_pair(const PhaseState& start1, const PhaseState& start2, ProcessKind process,
                    const ScalingParams& params, std::uint64_t seed, const ObstacleDensity& density,
                    double t_max) {
    if (process == ProcessKind::boltzmann) throw std::invalid_argument("run_pair: lattice processes only");
    const bool quenched = process == ProcessKind::lorentz;
    const std::uint64_t seed1 = quenched ? seed : rng::derive_seed(seed, kPairStream, 0);
    const std::uint64_t seed2 = quenched ? seed : rng::derive_seed(seed, kPairStream, 1);
    std::vector<RangeVisit> v1;
    std::vector<RangeVisit> v2;
    PairResult out;
    out.first = advance_lattice(process, start1, params, seed1, density, t_max, &v1);
    out.second = advance_lattice(process, start2, params, seed2, density, t_max, &v2);

    std::map<CellIndex, double> first1;
    for (const auto& rv : v1) first1.emplace(rv.cell, rv.t);
    std::map<CellIndex, double> first2;
    for (const auto& rv : v2) first2.emplace(rv.cell, rv.t);
    for (const auto& [cell, t1] : first1) {
        auto it = first2.find(cell);
        if (it == first2.end()) continue;
        const double meet = std::max(t1, it->second) * params.sqrt_eps;
        out.met_same_range = true;
        if (!out.first_meet_time || meet < *out.first_meet_time) out.first_meet_time = meet;
    }
    return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, std::uint64_t path_id, bool header) {
    if (header) out << "path_id,event_index,kind,t_macro,x1_macro,x2_macro,v1,v2,cell_j,cell_k,impact_parameter\n";
    char buf[64];
    const auto num = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < trajectory.events.size(); ++i) {
        const TrajectoryEvent& e = trajectory.events[i];
        const char* kind = e.kind == EventKind::start ? "start" : e.kind == EventKind::end ? "end" : "collision";
        out << path_id << ',' << i << ',' << kind << ',' << num(e.t * trajectory.unit) << ','
            << num(e.x.x * trajectory.unit) << ',' << num(e.x.y * trajectory.unit) << ',' << num(e.v_after.x)
            << ',' << num(e.v_after.y) << ',';
        if (e.kind == EventKind::collision && e.cell) out << e.cell->j << ',' << e.cell->k;
        else out << ',';
        out << ',';
        if (e.kind == EventKind::collision) out << num(e.impact_parameter);
        out << '\n';
    }
}

}  // namespace lorentz
