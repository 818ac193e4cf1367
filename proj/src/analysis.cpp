#include "lorentz/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "lorentz/errors.hpp"
#include "lorentz/parallel.hpp"
#include "lorentz/random.hpp"

namespace lorentz {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint32_t kMaxStartAttempts = 10000;

std::uint64_t particle_seed(ProcessKind process, std::uint64_t pair_seed, std::uint64_t particle) {
    return process == ProcessKind::markovian ? rng::derive_seed(pair_seed, kPairStream, particle) : pair_seed;
}

double arc(Vec2 a, Vec2 b) { return std::abs(std::atan2(cross(a, b), dot(a, b))); }

// Event list of a trajectory in macro units.
struct MacroPath {
    std::vector<double> t;
    std::vector<Vec2> x;
    std::vector<Vec2> v;

    explicit MacroPath(const Trajectory& traj) {
        for (const TrajectoryEvent& e : traj.events) {
            t.push_back(e.t * traj.unit);
            x.push_back(e.x * traj.unit);
            v.push_back(e.v_after);
        }
    }

    double horizon() const { return t.back(); }

    // Segment containing s (the last event at or before s, never the end event).
    std::size_t segment(double s) const {
        const auto it = std::upper_bound(t.begin(), t.end(), s);
        std::size_t m = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
        return std::min(m, t.size() - 2);
    }

    Vec2 position(std::size_t m, double s) const { return x[m] + v[m] * (s - t[m]); }
};

// Piecewise-linear increasing map through (s[i], u[i]).
struct Warp {
    std::vector<double> s;
    std::vector<double> u;

    double forward(double a) const {
        const auto it = std::upper_bound(s.begin(), s.end(), a);
        std::size_t i = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
        i = std::min(i, s.size() - 2);
        return u[i] + (u[i + 1] - u[i]) * (a - s[i]) / (s[i + 1] - s[i]);
    }

    double inverse(double b) const {
        const auto it = std::upper_bound(u.begin(), u.end(), b);
        std::size_t i = it == u.begin() ? 0 : static_cast<std::size_t>(it - u.begin()) - 1;
        i = std::min(i, u.size() - 2);
        return s[i] + (s[i + 1] - s[i]) * (b - u[i]) / (u[i + 1] - u[i]);
    }
};

// max(sup_t |z_a(t) - z_b(w(t))|, sup_t |t - w(t)|). Both paths are linear in t
// between the merged breakpoints, so the supremum is attained at piece ends.
double warp_cost(const MacroPath& a, const MacroPath& b, const Warp& w) {
    std::vector<double> bp = a.t;
    bp.insert(bp.end(), w.s.begin(), w.s.end());
    for (double tb : b.t) bp.push_back(w.inverse(tb));
    std::sort(bp.begin(), bp.end());
    const double horizon = a.horizon();
    double state = 0.0;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        const double p = std::clamp(bp[i], 0.0, horizon);
        const double q = std::clamp(bp[i + 1], 0.0, horizon);
        if (!(q > p)) continue;
        const double mid = 0.5 * (p + q);
        const std::size_t ma = a.segment(mid);
        const std::size_t mb = b.segment(w.forward(mid));
        const double dp = norm(a.position(ma, p) - b.position(mb, w.forward(p)));
        const double dq = norm(a.position(ma, q) - b.position(mb, w.forward(q)));
        state = std::max(state, std::max(dp, dq) + arc(a.v[ma], b.v[mb]));
    }
    if (bp.size() < 2 || !(horizon > 0.0)) {
        state = norm(a.x.front() - b.x.front()) + arc(a.v.front(), b.v.front());
    }
    double time = 0.0;
    for (std::size_t i = 0; i < w.s.size(); ++i) time = std::max(time, std::abs(w.s[i] - w.u[i]));
    return std::max(state, time);
}

}  // namespace

PhaseState StartLaw::draw(std::uint64_t seed, std::uint64_t index, std::uint32_t attempt) const {
    rng::Stream s(rng::derive_seed(seed, kStartStream, index), attempt, 0, rng::Tag::start);
    const double u1 = s.uniform();
    const double u2 = s.uniform();
    const double u3 = s.uniform();
    return {{window.x1_min + (window.x1_max - window.x1_min) * u1, window.x2_min + (window.x2_max - window.x2_min) * u2},
            unit_from_angle(kTwoPi * u3)};
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) { return rng::derive_seed(seed, kPathStream, path); }

bool inside_obstacle(Vec2 macro_x, const ScalingParams& params, const ObstacleDensity& density,
                     std::uint64_t dyn_seed) {
    const Vec2 p = params.to_micro(macro_x);
    const CellIndex c = cell_of(p);
    const Vec2 o = cell_center(c) + offset_at({dyn_seed, c, 0}, density, params);
    return norm(p - o) < params.sqrt_eps;
}

PhaseState start_state(const StartLaw& law, ProcessKind process, const ScalingParams& params,
                       const ObstacleDensity& density, std::uint64_t seed, std::uint64_t index,
                       std::uint64_t dyn_seed) {
    for (std::uint32_t attempt = 0; attempt < kMaxStartAttempts; ++attempt) {
        const PhaseState z = law.draw(seed, index, attempt);
        if (process == ProcessKind::boltzmann || !inside_obstacle(z.x, params, density, dyn_seed)) return z;
    }
    throw StepLimitError("start law: no start outside the obstacles");
}

Trajectory simulate_path(const EnsembleSpec& spec, std::uint64_t i) {
    const std::uint64_t dyn = path_seed(spec.seed, i);
    const ObstacleDensity& density = ObstacleDensity::get(spec.density);
    const PhaseState start = start_state(spec.start_law, spec.process, spec.params, density, spec.seed, i, dyn);
    if (spec.process == ProcessKind::boltzmann) return advance_boltzmann(start, spec.rate, spec.t_max, dyn);
    return advance_lattice(spec.process, start, spec.params, dyn, density, spec.t_max);
}

void append_free_paths(const Trajectory& trajectory, FreePathSamples& out, double start_cutoff) {
    const auto& ev = trajectory.events;
    const double u = trajectory.unit;
    if (ev.size() == 2) {
        out.censored.push_back((ev[1].t - ev[0].t) * u);
        return;
    }
    out.censored.push_back((ev[1].t - ev[0].t) * u);
    for (std::size_t i = 1; i + 2 < ev.size(); ++i) {
        if (ev[i].t * u >= start_cutoff) break;
        out.interior.push_back((ev[i + 1].t - ev[i].t) * u);
    }
    out.censored.push_back((ev[ev.size() - 1].t - ev[ev.size() - 2].t) * u);
}

FreePathSamples free_path_samples(const std::vector<Trajectory>& trajectories, double start_cutoff) {
    FreePathSamples out;
    for (const Trajectory& t : trajectories) append_free_paths(t, out, start_cutoff);
    return out;
}

FreePathSamples free_path_ensemble(const EnsembleSpec& spec, std::uint64_t n_paths, double start_cutoff,
                                   int threads) {
    const auto parts = parallel_map<FreePathSamples>(n_paths, threads, [&](std::size_t i) {
        FreePathSamples s;
        append_free_paths(simulate_path(spec, i), s, start_cutoff);
        return s;
    });
    FreePathSamples out;
    for (const FreePathSamples& p : parts) {
        out.interior.insert(out.interior.end(), p.interior.begin(), p.interior.end());
        out.censored.insert(out.censored.end(), p.censored.begin(), p.censored.end());
    }
    return out;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw EmptySampleError("ks_statistic: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return std::min(d, 1.0);
}

EmpiricalMeasure::EmpiricalMeasure(const Grid& grid) : grid_(grid) {
    if (grid.n1 < 1 || grid.n2 < 1 || grid.n_angle < 1) throw std::invalid_argument("grid: bin counts must be >= 1");
    if (!(grid.window.x1_max > grid.window.x1_min) || !(grid.window.x2_max > grid.window.x2_min)) {
        throw std::invalid_argument("grid: empty window");
    }
    counts_.assign(grid.size() + 1, 0);
}

std::size_t EmpiricalMeasure::bin_of(Vec2 x, Vec2 v) const {
    const Window& w = grid_.window;
    if (!w.contains(x)) return grid_.size();
    const int i = std::min(grid_.n1 - 1, static_cast<int>((x.x - w.x1_min) / (w.x1_max - w.x1_min) * grid_.n1));
    const int j = std::min(grid_.n2 - 1, static_cast<int>((x.y - w.x2_min) / (w.x2_max - w.x2_min) * grid_.n2));
    double theta = std::atan2(v.y, v.x);
    if (theta < 0.0) theta += kTwoPi;
    const int k = std::min(grid_.n_angle - 1, static_cast<int>(theta / kTwoPi * grid_.n_angle));
    return (static_cast<std::size_t>(i) * grid_.n2 + j) * grid_.n_angle + k;
}

void EmpiricalMeasure::add_bin(std::size_t bin, std::uint64_t count) {
    counts_.at(bin) += count;
    total_ += count;
}

void EmpiricalMeasure::merge(const EmpiricalMeasure& other) {
    if (!(grid_ == other.grid_)) throw GridMismatchError("merge: grids differ");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
}

std::uint64_t EmpiricalMeasure::count(int i, int j, int k) const {
    return counts_.at((static_cast<std::size_t>(i) * grid_.n2 + j) * grid_.n_angle + k);
}

std::vector<double> EmpiricalMeasure::masses() const {
    if (total_ == 0) throw EmptySampleError("empirical measure has no samples");
    std::vector<double> m(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) m[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
    return m;
}

double tv_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    if (!(a.grid() == b.grid())) throw GridMismatchError("tv_distance: grids differ");
    const std::vector<double> ma = a.masses();
    const std::vector<double> mb = b.masses();
    double s = 0.0;
    for (std::size_t i = 0; i < ma.size(); ++i) s += std::abs(ma[i] - mb[i]);
    return std::clamp(0.5 * s, 0.0, 1.0);
}

void write_histogram_csv(std::ostream& out, const EmpiricalMeasure& measure) {
    const Grid& g = measure.grid();
    const Window& w = g.window;
    const double total = static_cast<double>(measure.total());
    char buf[256];
    out << "i,j,k,x1,x2,angle,count,mass\n";
    const auto mass = [&](std::uint64_t c) { return total > 0.0 ? static_cast<double>(c) / total : 0.0; };
    for (int i = 0; i < g.n1; ++i) {
        for (int j = 0; j < g.n2; ++j) {
            for (int k = 0; k < g.n_angle; ++k) {
                const std::uint64_t c = measure.count(i, j, k);
                std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g,%llu,%.17g\n", i, j, k,
                              w.x1_min + (i + 0.5) * (w.x1_max - w.x1_min) / g.n1,
                              w.x2_min + (j + 0.5) * (w.x2_max - w.x2_min) / g.n2, (k + 0.5) * kTwoPi / g.n_angle,
                              static_cast<unsigned long long>(c), mass(c));
                out << buf;
            }
        }
    }
    std::snprintf(buf, sizeof buf, "-1,-1,-1,nan,nan,nan,%llu,%.17g\n",
                  static_cast<unsigned long long>(measure.overflow()), mass(measure.overflow()));
    out << buf;
}

double skorokhod_distance(const Trajectory& a, const Trajectory& b, int warp_grid) {
    const MacroPath pa(a);
    const MacroPath pb(b);
    const double horizon = pa.horizon();
    if (std::abs(horizon - pb.horizon()) > 1e-12 * std::max(1.0, horizon)) {
        throw HorizonMismatchError("skorokhod_distance: horizons differ");
    }

    Warp w{{0.0, horizon}, {0.0, horizon}};
    std::vector<double> knots;
    for (std::size_t i = 1; i + 1 < pa.t.size(); ++i) {
        if (pa.t[i] > 0.0 && pa.t[i] < horizon) knots.push_back(pa.t[i]);
    }
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    const std::size_t k = std::min<std::size_t>(knots.size(), static_cast<std::size_t>(std::max(0, warp_grid)));
    if (k > 0) {
        std::vector<double> chosen;
        for (std::size_t q = 0; q < k; ++q) chosen.push_back(knots[q * knots.size() / k]);
        w.s.assign(1, 0.0);
        w.s.insert(w.s.end(), chosen.begin(), chosen.end());
        w.s.push_back(horizon);
        w.u = w.s;
    }

    double best = warp_cost(pa, pb, w);
    for (int sweep = 0; sweep < 3 && k > 0; ++sweep) {
        for (std::size_t q = 1; q + 1 < w.s.size(); ++q) {
            const double lo = w.u[q - 1];
            const double hi = w.u[q + 1];
            const double margin = 1e-12 * std::max(1.0, horizon);
            std::vector<double> candidates;
            for (double tb : pb.t) {
                if (tb > lo + margin && tb < hi - margin) candidates.push_back(tb);
            }
            for (int m = 1; m < 32; ++m) candidates.push_back(lo + (hi - lo) * m / 32.0);
            if (w.s[q] > lo + margin && w.s[q] < hi - margin) candidates.push_back(w.s[q]);
            const double current = w.u[q];
            double best_u = current;
            for (double c : candidates) {
                w.u[q] = c;
                const double cost = warp_cost(pa, pb, w);
                if (cost < best) {
                    best = cost;
                    best_u = c;
                }
            }
            w.u[q] = best_u;
        }
    }
    return best;
}

bool identical_prefix(const Trajectory& a, const Trajectory& b, double t_limit) {
    const auto bits = [](double x) { return std::bit_cast<std::uint64_t>(x); };
    const auto same = [&](const TrajectoryEvent& p, const TrajectoryEvent& q) {
        return bits(p.t) == bits(q.t) && bits(p.x.x) == bits(q.x.x) && bits(p.x.y) == bits(q.x.y) &&
               bits(p.v_after.x) == bits(q.v_after.x) && bits(p.v_after.y) == bits(q.v_after.y) && p.kind == q.kind &&
               p.cell == q.cell && p.entry_index == q.entry_index &&
               bits(p.impact_parameter) == bits(q.impact_parameter);
    };
    if (bits(a.unit) != bits(b.unit)) return false;
    const std::size_t n = std::min(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < n; ++i) {
        const bool in_a = a.events[i].t * a.unit < t_limit;
        const bool in_b = b.events[i].t * b.unit < t_limit;
        if (!in_a && !in_b) return true;
        if (in_a != in_b || !same(a.events[i], b.events[i])) return false;
    }
    return a.events.size() == b.events.size();
}

std::vector<LoopSummary> loop_summaries(const ScalingParams& params, const ObstacleDensity& density,
                                        ProcessKind process, double t_max, std::uint64_t n_paths, std::uint64_t seed,
                                        const StartLaw& start_law, int threads) {
    if (process == ProcessKind::boltzmann) throw std::invalid_argument("loop statistics: lattice processes only");
    return parallel_map<LoopSummary>(n_paths, threads, [&](std::size_t i) {
        const std::uint64_t dyn = path_seed(seed, i);
        const PhaseState start = start_state(start_law, process, params, density, seed, i, dyn);
        const Trajectory traj = advance_lattice(process, start, params, dyn, density, t_max);
        const LoopReport report = detect_loops(traj, params, dyn, density);
        LoopSummary s;
        s.loop_events = static_cast<std::uint32_t>(report.loop_events.size());
        s.first_loop_time = report.empty() ? 0.0 : report.loop_events.front().t_macro;
        s.collisions = static_cast<std::uint32_t>(traj.collision_count());
        return s;
    });
}

EstimateWithError loop_probability(const ScalingParams& params, const ObstacleDensity& density, ProcessKind process,
                                   double t_max, std::uint64_t n_paths, std::uint64_t seed, const StartLaw& start_law,
                                   int threads) {
    const auto summaries = loop_summaries(params, density, process, t_max, n_paths, seed, start_law, threads);
    std::uint64_t hits = 0;
    for (const LoopSummary& s : summaries) hits += s.loop_events > 0 ? 1 : 0;
    const double n = static_cast<double>(n_paths);
    const double p = n_paths ? static_cast<double>(hits) / n : 0.0;
    return {p, n_paths ? std::sqrt(p * (1.0 - p) / n) : 0.0, n_paths};
}

EstimateWithError chaos_covariance(const Observable& g1, const Observable& g2, const ScalingParams& params,
                                   const ObstacleDensity& density, double t, std::uint64_t n_pairs,
                                   std::uint64_t seed, const StartLaw& start_law, ProcessKind process,
                                   int threads) {
    if (process == ProcessKind::boltzmann) throw std::invalid_argument("chaos_covariance: lattice processes only");
    if (n_pairs == 0) throw EmptySampleError("chaos_covariance: no pairs");
    struct Pair {
        double a;
        double b;
    };
    const auto values = parallel_map<Pair>(n_pairs, threads, [&](std::size_t i) {
        const std::uint64_t dyn = path_seed(seed, i);
        const PhaseState s1 =
            start_state(start_law, process, params, density, seed, 2 * i, particle_seed(process, dyn, 0));
        const PhaseState s2 =
            start_state(start_law, process, params, density, seed, 2 * i + 1, particle_seed(process, dyn, 1));
        const PairResult r = run_pair(s1, s2, process, params, dyn, density, t);
        const PhaseState z1 = r.first.state_at_macro(t);
        const PhaseState z2 = r.second.state_at_macro(t);
        return Pair{g1(z1.x, z1.v), g2(z2.x, z2.v)};
    });
    // Centred at the first pair so that constant observables give exactly zero.
    const double a0 = values[0].a;
    const double b0 = values[0].b;
    const double n = static_cast<double>(n_pairs);
    double sa = 0.0, sb = 0.0, sab = 0.0;
    for (const Pair& p : values) {
        sa += p.a - a0;
        sb += p.b - b0;
        sab += (p.a - a0) * (p.b - b0);
    }
    const double ma = sa / n;
    const double mb = sb / n;
    const double cov = sab / n - ma * mb;
    double ss = 0.0;
    for (const Pair& p : values) {
        const double psi = (p.a - a0 - ma) * (p.b - b0 - mb) - cov;
        ss += psi * psi;
    }
    const double se = n_pairs > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return {cov, se, n_pairs};
}

EmpiricalMeasure marginal_measure(const EnsembleSpec& spec, double t, std::uint64_t n_paths, const Grid& grid,
                                  int threads) {
    EnsembleSpec s = spec;
    s.t_max = t;
    EmpiricalMeasure m(grid);
    const auto bins = parallel_map<std::size_t>(n_paths, threads, [&](std::size_t i) {
        const PhaseState z = simulate_path(s, i).state_at_macro(t);
        return m.bin_of(z.x, z.v);
    });
    for (std::size_t b : bins) m.add_bin(b);
    return m;
}

Observable position_bump(Vec2 center, double width) {
    return [center, width](Vec2 x, Vec2) {
        const Vec2 d = x - center;
        const double q = dot(d, d) / (width * width);
        return q < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - q)) : 0.0;
    };
}

EstimateWithError mean_estimate(const std::vector<double>& samples) {
    if (samples.empty()) throw EmptySampleError("mean_estimate: no samples");
    const double n = static_cast<double>(samples.size());
    double s = 0.0;
    for (double x : samples) s += x;
    const double mean = s / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double se = samples.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return {mean, se, samples.size()};
}

}  // namespace lorentz
