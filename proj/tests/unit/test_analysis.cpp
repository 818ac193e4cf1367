#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "lorentz/analysis.hpp"
#include "lorentz/errors.hpp"
#include "lorentz/parallel.hpp"
#include "lorentz/random.hpp"

using namespace lorentz;

namespace {

constexpr double kPi = std::numbers::pi;

TrajectoryEvent event(double t, Vec2 x, Vec2 v, EventKind kind) {
    TrajectoryEvent e;
    e.t = t;
    e.x = x;
    e.v_after = v;
    e.kind = kind;
    return e;
}

// Macro trajectory through the given jump times and outgoing velocities.
Trajectory polyline(Vec2 x0, Vec2 v0, const std::vector<double>& jumps, const std::vector<Vec2>& velocities,
                    double horizon) {
    Trajectory tr;
    tr.process = ProcessKind::boltzmann;
    tr.events.push_back(event(0.0, x0, v0, EventKind::start));
    Vec2 x = x0;
    Vec2 v = v0;
    double t = 0.0;
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        x = x + v * (jumps[i] - t);
        t = jumps[i];
        v = velocities[i];
        tr.events.push_back(event(t, x, v, EventKind::collision));
    }
    tr.events.push_back(event(horizon, x + v * (horizon - t), v, EventKind::end));
    return tr;
}

double arc(Vec2 a, Vec2 b) { return std::abs(std::atan2(cross(a, b), dot(a, b))); }

// Identity-warp sup distance sampled on a fine grid; a lower bound of the exact value.
double sampled_sup(const Trajectory& a, const Trajectory& b, int n) {
    double d = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = a.t_final_macro() * i / n;
        const PhaseState za = a.state_at_macro(t);
        const PhaseState zb = b.state_at_macro(t);
        d = std::max(d, norm(za.x - zb.x) + arc(za.v, zb.v));
    }
    return d;
}

EmpiricalMeasure random_measure(const Grid& g, rng::Stream& s, int n, double spread) {
    EmpiricalMeasure m(g);
    for (int i = 0; i < n; ++i) {
        const double r = spread * std::sqrt(-2.0 * std::log(s.uniform_pos()));
        const double a = 2.0 * kPi * s.uniform();
        m.add({r * std::cos(a), r * std::sin(a)}, unit_from_angle(2.0 * kPi * s.uniform()));
    }
    return m;
}

}  // namespace

TEST_CASE("free-path samples") {
    const Trajectory tr = polyline({0, 0}, {1, 0}, {0.2, 0.7}, {{0, 1}, {-1, 0}}, 1.0);
    const FreePathSamples s = free_path_samples({tr});
    REQUIRE(s.interior.size() == 1);
    CHECK(s.interior[0] == doctest::Approx(0.5).epsilon(1e-15));
    REQUIRE(s.censored.size() == 2);
    CHECK(s.censored[0] == doctest::Approx(0.2));
    CHECK(s.censored[1] == doctest::Approx(0.3));

    const FreePathSamples none = free_path_samples({polyline({0, 0}, {1, 0}, {}, {}, 2.0)});
    CHECK(none.interior.empty());
    REQUIRE(none.censored.size() == 1);
    CHECK(none.censored[0] == 2.0);

    // A gap opening at or after the cutoff is dropped.
    const FreePathSamples cut = free_path_samples({tr}, 0.2);
    CHECK(cut.interior.empty());
    CHECK(cut.censored.size() == 2);
}

TEST_CASE("Boltzmann interior free paths are Exp(2)") {
    EnsembleSpec spec;
    spec.process = ProcessKind::boltzmann;
    spec.t_max = 8.0;
    spec.seed = 4;
    const FreePathSamples s = free_path_ensemble(spec, 60000, 2.0, 2);
    REQUIRE(s.interior.size() >= 100000);
    const double ks = ks_statistic(s.interior, [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-2.0 * x); });
    CHECK(ks < 0.005);
    const EstimateWithError m = mean_estimate(s.interior);
    CHECK(std::abs(m.value - 0.5) < 3.0 * m.standard_error);
}

TEST_CASE("ks statistic") {
    const auto uniform_cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
    CHECK(ks_statistic({0.5}, uniform_cdf) == 0.5);
    CHECK(ks_statistic({-3.0, -2.0, -1.0}, uniform_cdf) == 1.0);
    CHECK_THROWS_AS(ks_statistic({}, uniform_cdf), EmptySampleError);
    rng::Stream s(99, 0, 0, rng::Tag::generic);
    std::vector<double> xs(1000000);
    for (double& x : xs) x = s.uniform();
    CHECK(ks_statistic(xs, uniform_cdf) < 0.002);
}

TEST_CASE("empirical measure bookkeeping") {
    const Grid g{{-1, 1, -1, 1}, 4, 5, 6};
    EmpiricalMeasure m(g);
    m.add({0.0, 0.0}, {1, 0});
    m.add({0.99, -0.99}, unit_from_angle(-0.01));
    m.add({1.0, 0.0}, {1, 0});  // outside: right edge excluded
    CHECK(m.total() == 3);
    CHECK(m.overflow() == 1);
    CHECK(m.count(2, 2, 0) == 1);
    CHECK(m.count(3, 0, 5) == 1);
    std::uint64_t sum = 0;
    for (auto c : m.counts()) sum += c;
    CHECK(sum == m.total());
    double mass = 0.0;
    for (double x : m.masses()) mass += x;
    CHECK(std::abs(mass - 1.0) <= 1e-12);

    EmpiricalMeasure other(g);
    other.add({0.1, 0.1}, {0, 1});
    m.merge(other);
    CHECK(m.total() == 4);
    EmpiricalMeasure wrong(Grid{{-1, 1, -1, 1}, 4, 5, 7});
    CHECK_THROWS_AS(m.merge(wrong), GridMismatchError);
    CHECK_THROWS_AS(tv_distance(m, wrong), GridMismatchError);
    CHECK_THROWS_AS(EmpiricalMeasure(g).masses(), EmptySampleError);

    std::ostringstream csv;
    write_histogram_csv(csv, m);
    const std::string text = csv.str();
    CHECK(text.rfind("i,j,k,x1,x2,angle,count,mass\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(g.size() + 2));
}

TEST_CASE("tv distance is a metric on a fixed grid") {
    const Grid g{{-2, 2, -2, 2}, 8, 8, 8};
    rng::Stream s(5, 0, 0, rng::Tag::generic);
    const EmpiricalMeasure a = random_measure(g, s, 2000, 0.5);
    CHECK(tv_distance(a, a) == 0.0);

    EmpiricalMeasure left(g), right(g);
    left.add({-1, 0}, {1, 0});
    left.add({-1.5, 0}, {0, 1});
    right.add({1, 0}, {1, 0});
    CHECK(tv_distance(left, right) == doctest::Approx(1.0).epsilon(1e-15));

    // Same masses with a different total.
    EmpiricalMeasure twice(g);
    twice.merge(left);
    twice.merge(left);
    CHECK(tv_distance(left, twice) == 0.0);

    for (int i = 0; i < 50; ++i) {
        const EmpiricalMeasure x = random_measure(g, s, 200, 0.3 + 0.02 * i);
        const EmpiricalMeasure y = random_measure(g, s, 300, 0.5);
        const EmpiricalMeasure z = random_measure(g, s, 100, 0.8);
        CHECK(tv_distance(x, y) == tv_distance(y, x));
        CHECK(tv_distance(x, z) <= tv_distance(x, y) + tv_distance(y, z) + 1e-15);
        CHECK(tv_distance(x, y) > 0.0);
    }
}

TEST_CASE("tv distance between independent draws on a 32^3 grid") {
    EnsembleSpec spec;
    spec.process = ProcessKind::boltzmann;
    spec.start_law = StartLaw{{-0.25, 0.25, -0.25, 0.25}};
    const Grid g{{-8, 8, -8, 8}, 32, 32, 32};
    spec.seed = 1;
    const EmpiricalMeasure a = marginal_measure(spec, 1.0, 1000000, g, 2);
    spec.seed = 2;
    const EmpiricalMeasure b = marginal_measure(spec, 1.0, 1000000, g, 2);
    CHECK(tv_distance(a, b) < 0.03);
}

TEST_CASE("skorokhod distance") {
    const Vec2 v0 = unit_from_angle(0.3);
    const Vec2 v1 = unit_from_angle(2.0);
    const Trajectory a = polyline({0, 0}, v0, {0.4}, {v1}, 1.0);
    CHECK(skorokhod_distance(a, a, 0) == 0.0);
    CHECK(skorokhod_distance(a, a, 8) == 0.0);

    for (double delta : {1e-3, 0.01, 0.05}) {
        const Trajectory b = polyline({0, 0}, v0, {0.4 + delta}, {v1}, 1.0);
        const double plain = skorokhod_distance(a, b, 0);
        const double warped = skorokhod_distance(a, b, 4);
        CHECK(plain >= arc(v0, v1));
        // The end points differ by delta |v0 - v1| whatever the warp.
        CHECK(warped <= delta * std::max(1.0, norm(v0 - v1)) + 1e-12);
        CHECK(warped >= delta * norm(v0 - v1) - 1e-12);
    }

    // Identity warp equals the sup distance on the merged event grid.
    for (std::uint64_t k = 0; k < 20; ++k) {
        const Trajectory p = advance_boltzmann({{0, 0}, {1, 0}}, 2.0, 1.0, 100 + k);
        const Trajectory q = advance_boltzmann({{0, 0}, {1, 0}}, 2.0, 1.0, 200 + k);
        const double plain = skorokhod_distance(p, q, 0);
        const double sampled = sampled_sup(p, q, 20000);
        CHECK(plain >= sampled - 1e-12);
        CHECK(plain <= sampled + 1e-3);
        CHECK(skorokhod_distance(p, q, 6) <= plain);
    }

    const Trajectory shorter = polyline({0, 0}, v0, {}, {}, 0.9);
    CHECK_THROWS_AS(skorokhod_distance(a, shorter, 2), HorizonMismatchError);
}

TEST_CASE("start law") {
    const ScalingParams p = validate_params(1e-2, 0.75);
    const ObstacleDensity& d = ObstacleDensity::get(DensityKind::smooth_bump);
    const StartLaw law{{-0.25, 0.25, 0.0, 1.0}};
    int rejected = 0;
    for (std::uint64_t i = 0; i < 20000; ++i) {
        const std::uint64_t dyn = path_seed(3, i);
        const PhaseState z = start_state(law, ProcessKind::lorentz, p, d, 3, i, dyn);
        CHECK(law.window.contains(z.x));
        CHECK(std::abs(norm(z.v) - 1.0) < 1e-15);
        CHECK_FALSE(inside_obstacle(z.x, p, d, dyn));
        if (inside_obstacle(law.draw(3, i, 0).x, p, d, dyn)) ++rejected;
    }
    // Obstacles cover pi eps of each cell.
    CHECK(rejected > 0);
    CHECK(std::abs(rejected / 20000.0 - kPi * 1e-2) < 0.01);
}

TEST_CASE("loop probability") {
    const ScalingParams p = validate_params(1e-2, 0.75);
    const ObstacleDensity& d = ObstacleDensity::get(DensityKind::smooth_bump);
    const StartLaw law;
    const EstimateWithError a = loop_probability(p, d, ProcessKind::lorentz, 1.0, 2000, 8, law, 1);
    const EstimateWithError b = loop_probability(p, d, ProcessKind::lorentz, 1.0, 2000, 8, law, 3);
    CHECK(a.value == b.value);
    CHECK(a.standard_error == b.standard_error);
    CHECK(a.sample_count == 2000);
    CHECK(a.value > 0.0);
    CHECK(a.standard_error == doctest::Approx(std::sqrt(a.value * (1 - a.value) / 2000)));
    // Up to the first re-entry the two processes coincide.
    const EstimateWithError m = loop_probability(p, d, ProcessKind::markovian, 1.0, 2000, 8, law, 2);
    CHECK(m.value == a.value);
    CHECK_THROWS(loop_probability(p, d, ProcessKind::boltzmann, 1.0, 10, 8, law));
}

TEST_CASE("chaos covariance") {
    const ScalingParams p = validate_params(1e-2, 0.75);
    const ObstacleDensity& d = ObstacleDensity::get(DensityKind::smooth_bump);
    const StartLaw law;
    const Observable c = [](Vec2, Vec2) { return 0.1; };
    const EstimateWithError zero = chaos_covariance(c, c, p, d, 1.0, 500, 1, law);
    CHECK(zero.value == 0.0);
    CHECK(zero.standard_error == 0.0);

    const Observable g1 = position_bump({0.3, 0.0}, 0.6);
    const Observable g2 = position_bump({-0.3, 0.0}, 0.6);
    const EstimateWithError m = chaos_covariance(g1, g2, p, d, 1.0, 10000, 2, law, ProcessKind::markovian, 2);
    CHECK(std::abs(m.value) < 3.0 * m.standard_error);
    const EstimateWithError m1 = chaos_covariance(g1, g2, p, d, 1.0, 10000, 2, law, ProcessKind::markovian, 1);
    CHECK(m.value == m1.value);
    CHECK(m.standard_error == m1.standard_error);
}

TEST_CASE("marginal measure") {
    EnsembleSpec spec;
    spec.process = ProcessKind::boltzmann;
    spec.seed = 6;
    spec.start_law = StartLaw{{-0.5, 0.5, -0.5, 0.5}};
    const Grid g{spec.start_law.window.inflated(1.0), 8, 8, 8};
    const EmpiricalMeasure at0 = marginal_measure(spec, 0.0, 5000, g);
    EmpiricalMeasure direct(g);
    for (std::uint64_t i = 0; i < 5000; ++i) {
        const PhaseState z = spec.start_law.draw(6, i, 0);
        direct.add(z.x, z.v);
    }
    CHECK(tv_distance(at0, direct) == 0.0);

    spec.process = ProcessKind::markovian;
    spec.params = validate_params(1e-3, 0.75);
    const EmpiricalMeasure m1 = marginal_measure(spec, 1.0, 3000, g, 1);
    const EmpiricalMeasure m3 = marginal_measure(spec, 1.0, 3000, g, 3);
    CHECK(m1.counts() == m3.counts());
    CHECK(m1.overflow() == 0);
}

TEST_CASE("parallel map") {
    const auto v = parallel_map<std::size_t>(1000, 4, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == i * i);
    CHECK_THROWS_AS(parallel_map<int>(500, 3,
                                      [](std::size_t i) -> int {
                                          if (i == 321) throw std::runtime_error("boom");
                                          return 0;
                                      }),
                    std::runtime_error);
}

TEST_CASE("estimates") {
    const Observable g = position_bump({1.0, 2.0}, 0.5);
    CHECK(g({1.0, 2.0}, {1, 0}) == 1.0);
    CHECK(g({1.5, 2.0}, {1, 0}) == 0.0);
    CHECK(g({1.2, 2.0}, {1, 0}) > 0.0);
    const EstimateWithError e = mean_estimate({1.0, 2.0, 3.0});
    CHECK(e.value == 2.0);
    CHECK(e.standard_error == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(e.ci_low() == doctest::Approx(2.0 - std::sqrt(3.0)));
    CHECK_THROWS_AS(mean_estimate({}), EmptySampleError);
}
