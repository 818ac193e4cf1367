#include "config.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>

#include "lorentz/errors.hpp"

namespace lorentz::cli {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{"experiment", "process",  "epsilon",     "nu",      "phi",
                                            "rate",       "t_max",    "n_paths",     "n_pairs", "seed",
                                            "start_window", "grid",   "grid_window", "out_dir", "gap_cutoff"};
    return keys;
}

std::string normalise_key(std::string key) {
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string where(const std::string& key, const RawValue& v) {
    if (v.line == 0) return key + " (command line)";
    return key + " (line " + std::to_string(v.line) + ")";
}

std::optional<double> to_double(const std::string& s) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(x)) return std::nullopt;
    return x;
}

std::optional<std::uint64_t> to_uint(const std::string& s) {
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return x;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
    return out;
}

// Parses "x1_min, x1_max, x2_min, x2_max".
std::optional<Window> to_window(const std::string& s) {
    const auto parts = split_list(s);
    if (parts.size() != 4) return std::nullopt;
    double v[4];
    for (int i = 0; i < 4; ++i) {
        const auto d = to_double(parts[i]);
        if (!d) return std::nullopt;
        v[i] = *d;
    }
    return Window{v[0], v[1], v[2], v[3]};
}

bool writable_location(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::path p = std::filesystem::absolute(dir, ec);
    if (ec) return false;
    while (!p.empty() && !std::filesystem::exists(p, ec)) {
        if (p == p.parent_path()) return false;
        p = p.parent_path();
    }
    return std::filesystem::is_directory(p, ec) && ::access(p.c_str(), W_OK) == 0;
}

std::optional<Experiment> experiment_from_string(const std::string& s) {
    if (s == "free-path") return Experiment::free_path;
    if (s == "marginals") return Experiment::marginals;
    if (s == "loops") return Experiment::loops;
    if (s == "chaos") return Experiment::chaos;
    if (s == "oracle") return Experiment::oracle;
    if (s == "coupling") return Experiment::coupling;
    if (s == "simulate") return Experiment::simulate;
    return std::nullopt;
}

nlohmann::ordered_json window_json(const Window& w) { return {w.x1_min, w.x1_max, w.x2_min, w.x2_max}; }

}  // namespace

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::free_path: return "free-path";
        case Experiment::marginals: return "marginals";
        case Experiment::loops: return "loops";
        case Experiment::chaos: return "chaos";
        case Experiment::oracle: return "oracle";
        case Experiment::coupling: return "coupling";
        case Experiment::simulate: return "simulate";
    }
    return "?";
}

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error("invalid configuration: " + join(violations, "; ")), violations_(std::move(violations)) {}

RawDocument parse_document(const std::string& text) {
    RawDocument doc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // Strip the comment, ignoring '#' inside a quoted value.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        std::size_t b = 0;
        while (b < line.size() && is_space(line[b])) ++b;
        if (b == line.size()) continue;
        const std::size_t eq = line.find('=', b);
        if (eq == std::string::npos) throw ParseError(lineno, static_cast<int>(line.size()) + 1, "expected '='");
        std::size_t ke = eq;
        while (ke > b && is_space(line[ke - 1])) --ke;
        if (ke == b) throw ParseError(lineno, static_cast<int>(b) + 1, "missing key");
        const std::string raw_key = line.substr(b, ke - b);
        for (std::size_t i = 0; i < raw_key.size(); ++i) {
            const char c = raw_key[i];
            if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
                  c == '_' || c == '-')) {
                throw ParseError(lineno, static_cast<int>(b + i) + 1, "invalid character in key '" + raw_key + "'");
            }
        }
        const std::string key = normalise_key(raw_key);
        if (!known_keys().count(key)) throw ParseError(lineno, static_cast<int>(b) + 1, "unknown key '" + raw_key + "'");
        if (doc.count(key)) throw ParseError(lineno, static_cast<int>(b) + 1, "repeated key '" + raw_key + "'");

        std::size_t vb = eq + 1;
        while (vb < line.size() && is_space(line[vb])) ++vb;
        std::size_t ve = line.size();
        while (ve > vb && is_space(line[ve - 1])) --ve;
        std::string value = line.substr(vb, ve - vb);
        if (!value.empty() && value.front() == '"') {
            if (value.size() < 2 || value.back() != '"') {
                throw ParseError(lineno, static_cast<int>(vb) + 1, "unterminated quote");
            }
            value = value.substr(1, value.size() - 2);
            if (value.find('"') != std::string::npos) {
                throw ParseError(lineno, static_cast<int>(vb) + 1, "stray quote in value");
            }
        } else if (value.find('"') != std::string::npos) {
            throw ParseError(lineno, static_cast<int>(vb + value.find('"')) + 1, "stray quote in value");
        }
        doc[key] = RawValue{value, lineno, static_cast<int>(vb) + 1};
    }
    return doc;
}

void apply_overrides(RawDocument& doc, const std::vector<std::pair<std::string, std::string>>& overrides) {
    for (const auto& [k, v] : overrides) {
        const std::string key = normalise_key(k);
        if (!known_keys().count(key)) throw ParseError(0, 0, "unknown key '" + k + "'");
        doc[key] = RawValue{v, 0, 0};
    }
}

ExperimentConfig build_config(const RawDocument& doc) {
    ExperimentConfig c;
    std::vector<std::string> bad;
    const auto get = [&](const std::string& key) -> const RawValue* {
        const auto it = doc.find(key);
        return it == doc.end() ? nullptr : &it->second;
    };
    const auto number = [&](const std::string& key, double& out) {
        if (const RawValue* v = get(key)) {
            if (const auto d = to_double(v->text)) {
                out = *d;
                return true;
            }
            bad.push_back(where(key, *v) + ": not a number: '" + v->text + "'");
        }
        return false;
    };
    const auto count = [&](const std::string& key, std::uint64_t& out) {
        if (const RawValue* v = get(key)) {
            if (const auto d = to_uint(v->text)) {
                out = *d;
                return true;
            }
            bad.push_back(where(key, *v) + ": not a non-negative integer: '" + v->text + "'");
        }
        return false;
    };

    bool have_experiment = false;
    if (const RawValue* v = get("experiment")) {
        if (const auto e = experiment_from_string(v->text)) {
            c.experiment = *e;
            have_experiment = true;
        } else {
            bad.push_back(where("experiment", *v) +
                          ": expected free-path, marginals, loops, chaos, oracle, coupling or simulate, got '" +
                          v->text + "'");
        }
    } else {
        bad.push_back("experiment: required");
    }

    // Pair experiments default to the quenched process.
    if (c.experiment == Experiment::loops || c.experiment == Experiment::chaos || c.experiment == Experiment::coupling) {
        c.process = ProcessKind::lorentz;
    }
    if (const RawValue* v = get("process")) {
        try {
            c.process = process_kind_from_string(v->text);
        } catch (const std::exception&) {
            bad.push_back(where("process", *v) + ": expected lorentz, markovian or boltzmann, got '" + v->text + "'");
        }
    }
    if (have_experiment && c.process == ProcessKind::boltzmann &&
        (c.experiment == Experiment::loops || c.experiment == Experiment::chaos ||
         c.experiment == Experiment::coupling)) {
        bad.push_back("process: experiment " + to_string(c.experiment) + " needs a lattice process");
    }

    const bool have_eps = get("epsilon") != nullptr;
    const bool have_nu = get("nu") != nullptr;
    if (!have_eps) bad.push_back("epsilon: required");
    if (!have_nu) bad.push_back("nu: required");
    const bool eps_ok = number("epsilon", c.epsilon);
    const bool nu_ok = number("nu", c.nu);
    if (eps_ok && nu_ok) {
        try {
            c.params = validate_params(c.epsilon, c.nu);
        } catch (const ParamError& e) {
            const char* kind = e.kind() == ParamError::Kind::range_overflow ? "RangeOverflow" : "OutOfRange";
            bad.push_back(std::string("epsilon, nu: ") + kind + ": " + e.what());
        }
    }

    if (const RawValue* v = get("phi")) {
        try {
            c.phi = density_kind_from_string(v->text);
        } catch (const std::exception&) {
            bad.push_back(where("phi", *v) + ": expected uniform-disk or smooth-bump, got '" + v->text + "'");
        }
    }
    if (number("rate", c.rate) && !(c.rate > 0.0)) bad.push_back("rate: must be > 0");
    if (number("t_max", c.t_max) && !(c.t_max > 0.0)) bad.push_back("t_max: must be > 0");

    if (get("n_paths") && get("n_pairs")) bad.push_back("n_paths, n_pairs: give only one");
    if (count(get("n_pairs") ? "n_pairs" : "n_paths", c.n_paths) && c.n_paths < 1) {
        bad.push_back(std::string(get("n_pairs") ? "n_pairs" : "n_paths") + ": must be >= 1");
    }
    if (!get("seed")) bad.push_back("seed: required");
    count("seed", c.seed);

    if (const RawValue* v = get("start_window")) {
        if (const auto w = to_window(v->text)) {
            c.start_window = *w;
            if (!(w->x1_max > w->x1_min && w->x2_max > w->x2_min)) bad.push_back("start_window: empty rectangle");
        } else {
            bad.push_back(where("start_window", *v) + ": expected four numbers x1_min, x1_max, x2_min, x2_max");
        }
    }
    c.grid_window = c.start_window.inflated(c.t_max);
    if (const RawValue* v = get("grid_window")) {
        if (const auto w = to_window(v->text)) {
            c.grid_window = *w;
            if (!(w->x1_max > w->x1_min && w->x2_max > w->x2_min)) bad.push_back("grid_window: empty rectangle");
        } else {
            bad.push_back(where("grid_window", *v) + ": expected four numbers x1_min, x1_max, x2_min, x2_max");
        }
    }
    if (const RawValue* v = get("grid")) {
        const auto parts = split_list(v->text);
        bool ok = parts.size() == 3;
        for (std::size_t i = 0; ok && i < 3; ++i) {
            const auto n = to_uint(parts[i]);
            ok = n && *n >= 1 && *n <= 4096;
            if (ok) c.grid[i] = static_cast<int>(*n);
        }
        if (!ok) bad.push_back(where("grid", *v) + ": expected three counts in [1, 4096]");
    }
    c.gap_cutoff = c.t_max;
    if (number("gap_cutoff", c.gap_cutoff) && !(c.gap_cutoff > 0.0)) bad.push_back("gap_cutoff: must be > 0");

    if (const RawValue* v = get("out_dir")) c.out_dir = v->text;
    if (c.out_dir.empty()) {
        bad.push_back("out_dir: empty");
    } else if (!writable_location(c.out_dir)) {
        bad.push_back("out_dir: '" + c.out_dir + "' is not writable");
    }

    if (!bad.empty()) throw ValidationError(std::move(bad));
    return c;
}

ExperimentConfig parse_config(const std::string& text) { return build_config(parse_document(text)); }

nlohmann::ordered_json ExperimentConfig::to_json() const {
    nlohmann::ordered_json j;
    j["experiment"] = to_string(experiment);
    j["process"] = std::string(lorentz::to_string(process));
    j["epsilon"] = epsilon;
    j["nu"] = nu;
    j["phi"] = std::string(lorentz::to_string(phi));
    j["rate"] = rate;
    j["t_max"] = t_max;
    j["n_paths"] = n_paths;
    j["seed"] = seed;
    j["start_window"] = window_json(start_window);
    j["grid"] = {grid[0], grid[1], grid[2]};
    j["grid_window"] = window_json(grid_window);
    j["gap_cutoff"] = gap_cutoff;
    j["out_dir"] = out_dir;
    return j;
}

}  // namespace lorentz::cli
