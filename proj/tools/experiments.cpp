#include "experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "lorentz/analysis.hpp"
#include "lorentz/oracles.hpp"
#include "lorentz/parallel.hpp"
#include "lorentz/random.hpp"

namespace lorentz::cli {

namespace {

using nlohmann::ordered_json;

// Stream id of the Boltzmann reference ensemble in the marginals experiment.
constexpr std::uint64_t kReferenceStream = 0xB0;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

ordered_json estimate(const std::string& name, const EstimateWithError& e) {
    return {{"name", name}, {"value", e.value}, {"stderr", e.standard_error}, {"n", e.sample_count}};
}

ordered_json params_json(const ScalingParams& p) {
    return {{"epsilon", p.epsilon},
            {"nu", p.nu},
            {"micro", {{"lattice_spacing", 1.0}, {"obstacle_radius", p.obstacle_radius()},
                       {"patch_radius", p.patch_radius}, {"range_radius", p.range_radius}}},
            {"macro", {{"lattice_spacing", p.macro_spacing()}, {"obstacle_radius", p.macro_obstacle_radius()},
                       {"patch_radius", p.macro_patch_radius()}, {"range_radius", p.macro_range_radius()}}}};
}

EnsembleSpec ensemble(const ExperimentConfig& c) {
    EnsembleSpec s;
    s.process = c.process;
    s.params = c.params;
    s.density = c.phi;
    s.rate = c.rate;
    s.t_max = c.t_max;
    s.seed = c.seed;
    s.start_law = StartLaw{c.start_window};
    return s;
}

struct Report {
    ordered_json estimates = ordered_json::array();
    ordered_json histograms = ordered_json::array();
    ordered_json details = ordered_json::object();
    std::vector<OutputFile> files;

    void add_csv(const std::string& name, std::string content, bool histogram = false) {
        if (histogram) histograms.push_back(name);
        files.push_back({name, std::move(content)});
    }
};

void run_simulate(const ExperimentConfig& c, int threads, Report& r) {
    const EnsembleSpec spec = ensemble(c);
    const auto paths =
        parallel_map<Trajectory>(c.n_paths, threads, [&](std::size_t i) { return simulate_path(spec, i); });
    std::ostringstream csv;
    std::vector<double> counts;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        write_trajectory_csv(csv, paths[i], i, i == 0);
        counts.push_back(static_cast<double>(paths[i].collision_count()));
    }
    const EstimateWithError per_path = mean_estimate(counts);
    const EstimateWithError rate{per_path.value / c.t_max, per_path.standard_error / c.t_max, per_path.sample_count};
    r.estimates.push_back(estimate("collisions_per_path", per_path));
    r.estimates.push_back(estimate("collision_rate", rate));
    // kappa: collision rate relative to the rate 2 of the limiting equation.
    r.estimates.push_back(
        estimate("kappa", {rate.value / 2.0, rate.standard_error / 2.0, rate.sample_count}));
    r.add_csv("trajectories.csv", csv.str());
}

void run_free_path(const ExperimentConfig& c, int threads, Report& r) {
    const FreePathSamples s = free_path_ensemble(ensemble(c), c.n_paths, c.gap_cutoff, threads);
    std::ostringstream csv;
    csv << "kind,time\n";
    for (double x : s.interior) csv << "interior," << num(x) << '\n';
    for (double x : s.censored) csv << "censored," << num(x) << '\n';
    r.details["interior_count"] = s.interior.size();
    r.details["censored_count"] = s.censored.size();
    if (!s.interior.empty()) {
        const EstimateWithError m = mean_estimate(s.interior);
        r.estimates.push_back(estimate("interior_mean", m));
        const double rate = c.rate;
        const double ks = ks_statistic(s.interior, [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); });
        r.estimates.push_back(estimate("ks_vs_exponential", {ks, 0.0, m.sample_count}));
        r.details["reference_rate"] = rate;
    }
    r.add_csv("free_paths.csv", csv.str());
}

void run_marginals(const ExperimentConfig& c, int threads, Report& r) {
    const Grid grid{c.grid_window, c.grid[0], c.grid[1], c.grid[2]};
    const EnsembleSpec spec = ensemble(c);
    EnsembleSpec ref = spec;
    ref.process = ProcessKind::boltzmann;
    ref.seed = rng::derive_seed(c.seed, kReferenceStream, 0);
    const EmpiricalMeasure m = marginal_measure(spec, c.t_max, c.n_paths, grid, threads);
    const EmpiricalMeasure b = marginal_measure(ref, c.t_max, c.n_paths, grid, threads);
    r.estimates.push_back(estimate("tv_to_boltzmann", {tv_distance(m, b), 0.0, c.n_paths}));
    const double n = static_cast<double>(c.n_paths);
    r.estimates.push_back(estimate("overflow_fraction", {static_cast<double>(m.overflow()) / n, 0.0, c.n_paths}));
    r.estimates.push_back(
        estimate("reference_overflow_fraction", {static_cast<double>(b.overflow()) / n, 0.0, c.n_paths}));
    std::ostringstream hm, hb;
    write_histogram_csv(hm, m);
    write_histogram_csv(hb, b);
    r.add_csv("histogram_" + std::string(to_string(c.process)) + ".csv", hm.str(), true);
    r.add_csv("histogram_boltzmann_reference.csv", hb.str(), true);
}

void run_loops(const ExperimentConfig& c, int threads, Report& r) {
    const ObstacleDensity& d = ObstacleDensity::get(c.phi);
    const auto s = loop_summaries(c.params, d, c.process, c.t_max, c.n_paths, c.seed, StartLaw{c.start_window}, threads);
    std::ostringstream csv;
    csv << "path,loop_events,first_loop_time,collisions\n";
    std::uint64_t hits = 0;
    std::vector<double> events;
    for (std::size_t i = 0; i < s.size(); ++i) {
        csv << i << ',' << s[i].loop_events << ',' << num(s[i].first_loop_time) << ',' << s[i].collisions << '\n';
        hits += s[i].loop_events > 0 ? 1 : 0;
        events.push_back(s[i].loop_events);
    }
    const double n = static_cast<double>(c.n_paths);
    const double p = static_cast<double>(hits) / n;
    r.estimates.push_back(estimate("loop_probability", {p, std::sqrt(p * (1.0 - p) / n), c.n_paths}));
    r.estimates.push_back(estimate("loop_events_per_path", mean_estimate(events)));
    r.add_csv("loops.csv", csv.str());
}

void run_chaos(const ExperimentConfig& c, int threads, Report& r) {
    const Window& w = c.start_window;
    const Vec2 mid{0.5 * (w.x1_min + w.x1_max), 0.5 * (w.x2_min + w.x2_max)};
    const Vec2 shift{0.3, 0.0};
    const double width = 0.6;
    const Observable g1 = position_bump(mid + shift, width);
    const Observable g2 = position_bump(mid - shift, width);
    const EstimateWithError cov = chaos_covariance(g1, g2, c.params, ObstacleDensity::get(c.phi), c.t_max, c.n_paths,
                                                   c.seed, StartLaw{c.start_window}, c.process, threads);
    r.estimates.push_back(estimate("covariance", cov));
    r.details["observables"] = {
        {{"kind", "position_bump"}, {"center", {mid.x + shift.x, mid.y}}, {"width", width}},
        {{"kind", "position_bump"}, {"center", {mid.x - shift.x, mid.y}}, {"width", width}}};
}

void run_oracle(const ExperimentConfig& c, int threads, Report& r) {
    const ObstacleDensity& d = ObstacleDensity::get(c.phi);
    const PassageProfile ind = PassageProfile::indicator();
    struct Row {
        double beta, y1;
        std::int64_t n;
        double direct;
        FourierSum fourier;
    };
    std::vector<Row> rows;
    for (double beta : {0.1, 0.4, 0.7}) {
        for (std::int64_t n : {11, 101, 1001}) {
            for (double y1 : {0.2, -0.31}) rows.push_back({beta, y1, n, 0.0, {}});
        }
    }
    const auto done = parallel_map<Row>(rows.size(), threads, [&](std::size_t i) {
        Row row = rows[i];
        row.direct = passage_sum_direct(row.y1, row.beta, row.n, ind, c.params, d);
        row.fourier = passage_sum_fourier(row.y1, row.beta, row.n, ind, c.params, d);
        return row;
    });
    std::ostringstream csv;
    csv << "epsilon,nu,beta,n,y1,direct,fourier,relative_gap,leading_term,remainder,k_max,truncation_warning,"
           "even_n_extension\n";
    double max_gap = 0.0;
    for (const Row& row : done) {
        const double gap = std::abs(row.fourier.value - row.direct) / std::abs(row.direct);
        max_gap = std::max(max_gap, gap);
        csv << num(c.epsilon) << ',' << num(c.nu) << ',' << num(row.beta) << ',' << row.n << ',' << num(row.y1) << ','
            << num(row.direct) << ',' << num(row.fourier.value) << ',' << num(gap) << ','
            << num(row.fourier.leading_term) << ',' << num(row.fourier.remainder) << ',' << row.fourier.k_max << ','
            << (row.fourier.truncation_warning ? "true" : "false") << ','
            << (row.fourier.even_n_extension ? "true" : "false") << '\n';
    }
    r.estimates.push_back(estimate("max_relative_gap", {max_gap, 0.0, done.size()}));
    r.add_csv("oracle.csv", csv.str());

    // No-collision probability over about one unit of macro time.
    std::ostringstream p0;
    p0 << "beta,y1,n,t,p0_product,exp_minus_2t\n";
    for (double beta : {0.1, 0.4, 0.7}) {
        const auto n = static_cast<std::int64_t>(std::ceil(std::cos(beta) / c.params.sqrt_eps));
        const double t = static_cast<double>(n) * c.params.sqrt_eps / std::cos(beta);
        p0 << num(beta) << ",0.2," << n << ',' << num(t) << ',' << num(p0_product(0.2, beta, n, c.params, d)) << ','
           << num(std::exp(-2.0 * t)) << '\n';
    }
    r.add_csv("p0.csv", p0.str());
}

void run_coupling(const ExperimentConfig& c, int threads, Report& r) {
    const ObstacleDensity& d = ObstacleDensity::get(c.phi);
    const StartLaw law{c.start_window};
    struct Row {
        bool loop_free;
        bool identical;
        std::size_t cq, cm;
    };
    const auto rows = parallel_map<Row>(c.n_paths, threads, [&](std::size_t i) {
        const std::uint64_t dyn = path_seed(c.seed, i);
        const PhaseState start = start_state(law, ProcessKind::lorentz, c.params, d, c.seed, i, dyn);
        const Trajectory q = advance_lorentz(start, c.params, dyn, d, c.t_max);
        const Trajectory m = advance_markovian(start, c.params, dyn, d, c.t_max);
        const LoopReport rep = detect_loops(q, c.params, dyn, d);
        const double limit = rep.empty() ? std::numeric_limits<double>::infinity() : rep.loop_events.front().t_macro;
        return Row{rep.empty(), identical_prefix(q, m, limit), q.collision_count(), m.collision_count()};
    });
    std::ostringstream csv;
    csv << "path,loop_free,identical_prefix,collisions_quenched,collisions_markovian\n";
    std::uint64_t free = 0, free_identical = 0, identical = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& row = rows[i];
        csv << i << ',' << (row.loop_free ? "true" : "false") << ',' << (row.identical ? "true" : "false") << ','
            << row.cq << ',' << row.cm << '\n';
        free += row.loop_free;
        free_identical += row.loop_free && row.identical;
        identical += row.identical;
    }
    const double n = static_cast<double>(c.n_paths);
    const double pf = static_cast<double>(free) / n;
    r.estimates.push_back(estimate("loop_free_fraction", {pf, std::sqrt(pf * (1.0 - pf) / n), c.n_paths}));
    r.estimates.push_back(estimate("identical_prefix_fraction", {static_cast<double>(identical) / n, 0.0, c.n_paths}));
    r.details["loop_free_paths"] = free;
    r.details["loop_free_paths_identical"] = free_identical;
    r.add_csv("coupling.csv", csv.str());
}

}  // namespace

std::string artifact_version() { return LORENTZ_VERSION; }

std::vector<OutputFile> run_experiment(const ExperimentConfig& config, int threads) {
    Report r;
    switch (config.experiment) {
        case Experiment::simulate: run_simulate(config, threads, r); break;
        case Experiment::free_path: run_free_path(config, threads, r); break;
        case Experiment::marginals: run_marginals(config, threads, r); break;
        case Experiment::loops: run_loops(config, threads, r); break;
        case Experiment::chaos: run_chaos(config, threads, r); break;
        case Experiment::oracle: run_oracle(config, threads, r); break;
        case Experiment::coupling: run_coupling(config, threads, r); break;
    }
    ordered_json report;
    report["experiment"] = to_string(config.experiment);
    report["version"] = artifact_version();
    report["config"] = config.to_json();
    report["params"] = params_json(config.params);
    report["seed"] = config.seed;
    report["estimates"] = r.estimates;
    report["histograms"] = r.histograms;
    ordered_json files = ordered_json::array();
    for (const OutputFile& f : r.files) files.push_back(f.name);
    report["outputs"] = files;
    if (!r.details.empty()) report["details"] = r.details;

    std::vector<OutputFile> out;
    out.push_back({"report.json", report.dump(2) + "\n"});
    for (OutputFile& f : r.files) out.push_back(std::move(f));
    return out;
}

void write_outputs(const ExperimentConfig& config, const std::vector<OutputFile>& files) {
    namespace fs = std::filesystem;
    const fs::path dir(config.out_dir);
    const bool created = !fs::exists(dir);
    std::vector<fs::path> written;
    try {
        fs::create_directories(dir);
        for (const OutputFile& f : files) {
            const fs::path p = dir / f.name;
            written.push_back(p);
            std::ofstream out(p, std::ios::binary | std::ios::trunc);
            out.write(f.content.data(), static_cast<std::streamsize>(f.content.size()));
            out.close();
            if (!out) throw std::runtime_error("cannot write " + p.string());
        }
    } catch (...) {
        std::error_code ec;
        for (const fs::path& p : written) fs::remove(p, ec);
        if (created) fs::remove(dir, ec);
        throw;
    }
}

}  // namespace lorentz::cli
