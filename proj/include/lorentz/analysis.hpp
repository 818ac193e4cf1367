#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "lorentz/density.hpp"
#include "lorentz/dynamics.hpp"
#include "lorentz/oracles.hpp"
#include "lorentz/scaling.hpp"

namespace lorentz {

struct EstimateWithError {
    double value{0.0};
    double standard_error{0.0};
    std::uint64_t sample_count{0};

    double ci_low() const { return value - 3.0 * standard_error; }
    double ci_high() const { return value + 3.0 * standard_error; }
};

/// Axis-aligned rectangle in macro units.
struct Window {
    double x1_min{-0.5};
    double x1_max{0.5};
    double x2_min{-0.5};
    double x2_max{0.5};

    bool operator==(const Window&) const = default;
    bool contains(Vec2 x) const { return x.x >= x1_min && x.x < x1_max && x.y >= x2_min && x.y < x2_max; }
    Window inflated(double margin) const {
        return {x1_min - margin, x1_max + margin, x2_min - margin, x2_max + margin};
    }
};

/// Stream ids for derive_seed.
inline constexpr std::uint64_t kStartStream = 0x57A7;
inline constexpr std::uint64_t kPathStream = 0x9A7B;

/// Uniform position in `window` times uniform direction.
struct StartLaw {
    Window window;

    /// Draw number `attempt` of start stream `index`.
    PhaseState draw(std::uint64_t seed, std::uint64_t index, std::uint32_t attempt) const;
};

/// Seed of the dynamics of path (or pair) `path`.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path);

/// True when the macroscopic point lies inside the obstacle of its own cell in
/// the realisation `dyn_seed` (first entry, which is what a path starting
/// there sees).
bool inside_obstacle(Vec2 macro_x, const ScalingParams& params, const ObstacleDensity& density,
                     std::uint64_t dyn_seed);

/// Start state from start stream `index`. For lattice processes, draws that
/// land inside an obstacle of realisation `dyn_seed` are rejected.
PhaseState start_state(const StartLaw& law, ProcessKind process, const ScalingParams& params,
                       const ObstacleDensity& density, std::uint64_t seed, std::uint64_t index,
                       std::uint64_t dyn_seed);

/// Everything needed to generate path i of an ensemble.
struct EnsembleSpec {
    ProcessKind process{ProcessKind::markovian};
    ScalingParams params{};
    DensityKind density{DensityKind::smooth_bump};
    double rate{2.0};  // boltzmann only
    double t_max{1.0};
    std::uint64_t seed{0};
    StartLaw start_law{};
};

/// Start state and trajectory of path i.
Trajectory simulate_path(const EnsembleSpec& spec, std::uint64_t i);

struct FreePathSamples {
    std::vector<double> interior;  // gaps between consecutive collisions, macro
    std::vector<double> censored;  // start to first collision, last collision to end
};

/// Appends the macro free-flight times of one trajectory. Interior gaps whose
/// opening collision happens at or after `start_cutoff` are skipped; censored
/// gaps are always recorded.
void append_free_paths(const Trajectory& trajectory, FreePathSamples& out,
                       double start_cutoff = std::numeric_limits<double>::infinity());

FreePathSamples free_path_samples(const std::vector<Trajectory>& trajectories,
                                  double start_cutoff = std::numeric_limits<double>::infinity());

/// Free paths of n_paths trajectories of `spec`, merged in path order.
FreePathSamples free_path_ensemble(const EnsembleSpec& spec, std::uint64_t n_paths, double start_cutoff,
                                   int threads = 1);

/// sup |F_n - cdf|. Throws EmptySampleError on an empty sample.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Histogram grid over (x1, x2, angle in [0, 2 pi)).
struct Grid {
    Window window;
    int n1{32};
    int n2{32};
    int n_angle{32};

    bool operator==(const Grid&) const = default;
    std::size_t size() const { return static_cast<std::size_t>(n1) * n2 * n_angle; }
};

/// Counts on a Grid plus one overflow bin for points outside the window.
class EmpiricalMeasure {
public:
    explicit EmpiricalMeasure(const Grid& grid);

    /// Flat bin index of a state; size() of the grid for the overflow bin.
    std::size_t bin_of(Vec2 x, Vec2 v) const;
    void add(Vec2 x, Vec2 v) { add_bin(bin_of(x, v)); }
    void add_bin(std::size_t bin, std::uint64_t count = 1);
    /// Throws GridMismatchError.
    void merge(const EmpiricalMeasure& other);

    const Grid& grid() const { return grid_; }
    std::uint64_t total() const { return total_; }
    std::uint64_t overflow() const { return counts_.back(); }
    std::uint64_t count(int i, int j, int k) const;
    /// Counts, overflow last.
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    /// counts / total, overflow last. Throws EmptySampleError when total is 0.
    std::vector<double> masses() const;

private:
    Grid grid_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_{0};
};

/// Half the L1 distance of the normalised masses, overflow bin included.
/// Throws GridMismatchError.
double tv_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// One CSV row per grid bin: i,j,k,x1,x2,angle,count,mass; then one overflow row
/// with indices -1.
void write_histogram_csv(std::ostream& out, const EmpiricalMeasure& measure);

/// Warp-restricted Skorokhod distance in macro units with state distance
/// |x - x'| + arc(v, v') and cost max(state sup, sup |t - lambda(t)|). The warp
/// is piecewise linear with up to warp_grid knots placed at collision times of
/// `a`, optimised by coordinate descent (3 sweeps). warp_grid = 0 gives the
/// identity-warp sup distance. Throws HorizonMismatchError.
double skorokhod_distance(const Trajectory& a, const Trajectory& b, int warp_grid);

/// True when the events of a and b before macro time t_limit agree bit for bit
/// (process tags aside). With an infinite limit the whole event lists must agree.
bool identical_prefix(const Trajectory& a, const Trajectory& b,
                      double t_limit = std::numeric_limits<double>::infinity());

struct LoopSummary {
    std::uint32_t loop_events{0};
    double first_loop_time{0.0};  // macro; 0 without loops
    std::uint32_t collisions{0};
};

/// LoopReport digest of every path.
std::vector<LoopSummary> loop_summaries(const ScalingParams& params, const ObstacleDensity& density,
                                        ProcessKind process, double t_max, std::uint64_t n_paths, std::uint64_t seed,
                                        const StartLaw& start_law, int threads = 1);

/// Fraction of paths whose LoopReport is nonempty, binomial standard error.
/// Lattice processes only.
EstimateWithError loop_probability(const ScalingParams& params, const ObstacleDensity& density, ProcessKind process,
                                   double t_max, std::uint64_t n_paths, std::uint64_t seed, const StartLaw& start_law,
                                   int threads = 1);

/// Cov(g1(z1(t)), g2(z2(t))) over pairs started independently from start_law and
/// run with run_pair; delta-method standard error.
EstimateWithError chaos_covariance(const Observable& g1, const Observable& g2, const ScalingParams& params,
                                   const ObstacleDensity& density, double t, std::uint64_t n_pairs,
                                   std::uint64_t seed, const StartLaw& start_law,
                                   ProcessKind process = ProcessKind::lorentz, int threads = 1);

/// Histogram of the states at time t of n_paths paths of `spec` (spec.t_max is
/// replaced by t).
EmpiricalMeasure marginal_measure(const EnsembleSpec& spec, double t, std::uint64_t n_paths, const Grid& grid,
                                  int threads = 1);

/// Smooth bump of position, 1 at `center`, supported in the disk of radius `width`.
Observable position_bump(Vec2 center, double width);

/// Mean and standard error of a sample. Throws EmptySampleError.
EstimateWithError mean_estimate(const std::vector<double>& samples);

}  // namespace lorentz
