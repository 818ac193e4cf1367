#include "lorentz/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "lorentz/errors.hpp"
#include "quadrature.hpp"

namespace lorentz {

namespace {

constexpr double kPi = std::numbers::pi;

double bump_unnormalized(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

// Cubic Hermite on [0, 1] with endpoint values and (scaled) slopes.
double hermite(double u, double f0, double d0, double f1, double d1) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * f0 + (u3 - 2 * u2 + u) * d0 + (-2 * u3 + 3 * u2) * f1 + (u3 - u2) * d1;
}

}  // namespace

const LineMarginal& LineMarginal::get(DensityKind kind) {
    static const LineMarginal uniform(DensityKind::uniform_disk);
    if (kind == DensityKind::uniform_disk) return uniform;
    static const LineMarginal bump(DensityKind::smooth_bump);
    return bump;
}

LineMarginal::LineMarginal(DensityKind kind) : kind_(kind) {
    if (kind_ != DensityKind::smooth_bump) return;
    const double z = bump_normalizer();
    boost::math::quadrature::tanh_sinh<double> ts;

    // Chord integrals over t = c u, c = sqrt(1 - x^2).
    const auto chord = [&](double x, bool derivative) {
        const double c2 = 1.0 - x * x;
        if (c2 <= 0.0) return 0.0;
        const double c = std::sqrt(c2);
        const auto f = [&](double u) {
            const double r2 = x * x + c2 * u * u;
            const double g = bump_unnormalized(r2);
            if (!derivative) return g;
            const double q = 1.0 - r2;
            return g == 0.0 ? 0.0 : g / (q * q);
        };
        const double integral = 2.0 * c * ts.integrate(f, 0.0, 1.0, 1e-14) / z;
        return derivative ? -2.0 * x * integral : integral;
    };

    constexpr int half = kKnots / 2;
    const double h = 2.0 / kKnots;
    value_.assign(kKnots + 1, 0.0);
    slope_.assign(kKnots + 1, 0.0);
    cdf_.assign(kKnots + 1, 0.0);
    const detail::GaussRule& gl = detail::gauss_rule(6);
    cdf_[half] = 0.5;
    for (int i = 0; i <= half; ++i) {
        const double x = i * h;
        value_[half + i] = value_[half - i] = chord(x, false);
        slope_[half + i] = chord(x, true);
        slope_[half - i] = -slope_[half + i];
        if (i > 0) {
            const double a = (i - 1) * h;
            double mass = 0.0;
            for (std::size_t q = 0; q < gl.x.size(); ++q) mass += gl.w[q] * chord(a + 0.5 * h * (1.0 + gl.x[q]), false);
            cdf_[half + i] = cdf_[half + i - 1] + 0.5 * h * mass;
            cdf_[half - i] = 1.0 - cdf_[half + i];
        }
    }
    value_.front() = value_.back() = 0.0;
    slope_.front() = slope_.back() = 0.0;

    std::vector<double> r;
    std::vector<double> w;
    detail::composite_rule(20, 64, 0.0, 1.0, r, w);
    for (std::size_t i = 0; i < r.size(); ++i) {
        hankel_r_.push_back(r[i]);
        hankel_w_.push_back(2.0 * kPi * w[i] * bump_unnormalized(r[i] * r[i]) / z * r[i]);
    }
}

double LineMarginal::density(double x) const {
    if (x <= -1.0 || x >= 1.0) return 0.0;
    if (kind_ == DensityKind::uniform_disk) return 2.0 / kPi * std::sqrt(1.0 - x * x);
    const double h = 2.0 / kKnots;
    const double pos = (x + 1.0) / h;
    const int i = std::min(kKnots - 1, static_cast<int>(pos));
    return hermite(pos - i, value_[i], h * slope_[i], value_[i + 1], h * slope_[i + 1]);
}

double LineMarginal::cdf(double x) const {
    if (x <= -1.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (kind_ == DensityKind::uniform_disk) return 0.5 + (x * std::sqrt(1.0 - x * x) + std::asin(x)) / kPi;
    const double h = 2.0 / kKnots;
    const double pos = (x + 1.0) / h;
    const int i = std::min(kKnots - 1, static_cast<int>(pos));
    return hermite(pos - i, cdf_[i], h * value_[i], cdf_[i + 1], h * value_[i + 1]);
}

double LineMarginal::fourier(double f) const {
    if (kind_ == DensityKind::uniform_disk) {
        const double z = kPi * f;
        if (std::abs(z) < 1e-6) return 1.0 - z * z / 2.0;
        return boost::math::cyl_bessel_j(1, 2.0 * z) / z;
    }
    double s = 0.0;
    const double k = 2.0 * kPi * f;
    // glibc j0: agrees with Boost to 2e-16 and is about ten times faster.
    for (std::size_t i = 0; i < hankel_r_.size(); ++i) s += hankel_w_[i] * ::j0(k * hankel_r_[i]);
    return s;
}

PassageProfile PassageProfile::indicator() { return PassageProfile{}; }

PassageProfile PassageProfile::tabulated(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() < 2 || knots.size() != values.size()) {
        throw std::invalid_argument("PassageProfile: need at least two knots and one value per knot");
    }
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (knots[i] < -1.0 || knots[i] > 1.0 || (i > 0 && !(knots[i] > knots[i - 1]))) {
            throw std::invalid_argument("PassageProfile: knots must increase strictly inside [-1, 1]");
        }
    }
    PassageProfile p;
    p.indicator_ = false;
    p.knots_ = std::move(knots);
    p.values_ = std::move(values);
    return p;
}

double PassageProfile::operator()(double s) const {
    if (indicator_) return (s >= -1.0 && s <= 1.0) ? 1.0 : 0.0;
    if (s < knots_.front() || s > knots_.back()) return 0.0;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
    if (it == knots_.end()) return values_.back();
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double u = (s - knots_[i]) / (knots_[i + 1] - knots_[i]);
    return values_[i] + u * (values_[i + 1] - values_[i]);
}

double PassageProfile::integral() const {
    if (indicator_) return 2.0;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) s += 0.5 * (values_[i] + values_[i + 1]) * (knots_[i + 1] - knots_[i]);
    return s;
}

double PassageProfile::l1_norm() const {
    if (indicator_) return 2.0;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        const double a = values_[i];
        const double b = values_[i + 1];
        const double h = knots_[i + 1] - knots_[i];
        if (a * b >= 0.0) {
            s += 0.5 * (std::abs(a) + std::abs(b)) * h;
        } else {
            s += 0.5 * (a * a + b * b) / (std::abs(a) + std::abs(b)) * h;
        }
    }
    return s;
}

std::complex<double> PassageProfile::fourier(double f) const {
    if (indicator_) {
        if (f == 0.0) return 2.0;
        return std::sin(2.0 * kPi * f) / (kPi * f);
    }
    const detail::GaussRule& gl = detail::gauss_rule(16);
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        const double a = knots_[i];
        const double b = knots_[i + 1];
        const int pieces = 1 + static_cast<int>(std::abs(f) * (b - a));
        const double h = (b - a) / pieces;
        for (int p = 0; p < pieces; ++p) {
            const double mid = a + (p + 0.5) * h;
            for (std::size_t q = 0; q < gl.x.size(); ++q) {
                const double s = mid + 0.5 * h * gl.x[q];
                const double u = (s - a) / (b - a);
                const double val = values_[i] + u * (values_[i + 1] - values_[i]);
                acc += 0.5 * h * gl.w[q] * val * std::polar(1.0, -2.0 * kPi * f * s);
            }
        }
    }
    return acc;
}

double p_single_passage(double y, double beta, const ScalingParams& params, const ObstacleDensity& density) {
    const LineMarginal& m = LineMarginal::get(density.kind());
    const double rho = (y - crossing_y0(beta)) * std::cos(beta);
    const double a = params.patch_radius;
    const double p = m.cdf((rho + params.sqrt_eps) / a) - m.cdf((rho - params.sqrt_eps) / a);
    return std::clamp(p, 0.0, 1.0);
}

double p_passage(double y, double beta, const PassageProfile& profile, const ScalingParams& params,
                 const ObstacleDensity& density) {
    if (profile.is_indicator()) return p_single_passage(y, beta, params, density);
    const LineMarginal& m = LineMarginal::get(density.kind());
    const double rho = (y - crossing_y0(beta)) * std::cos(beta);
    const double a = params.patch_radius;
    const double se = params.sqrt_eps;
    // Integrate sqrt(eps) psi_0(s) phi_eps(rho + sqrt(eps) s) over the overlap of supports.
    const double lo = std::max(-1.0, (-a - rho) / se);
    const double hi = std::min(1.0, (a - rho) / se);
    if (!(lo < hi)) return 0.0;
    std::vector<double> cuts{lo};
    for (double k : profile.knots()) {
        if (k > lo && k < hi) cuts.push_back(k);
    }
    cuts.push_back(hi);
    const detail::GaussRule& gl = detail::gauss_rule(16);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        const double half = 0.5 * (cuts[i + 1] - cuts[i]);
        for (std::size_t q = 0; q < gl.x.size(); ++q) {
            const double s = mid + half * gl.x[q];
            acc += half * gl.w[q] * profile(s) * m.density((rho + se * s) / a) / a;
        }
    }
    return se * acc;
}

double p_passage_periodic(double y, double beta, const PassageProfile& profile, const ScalingParams& params,
                          const ObstacleDensity& density) {
    double s = 0.0;
    for (int i = -2; i <= 2; ++i) s += p_passage(y + i, beta, profile, params, density);
    return s;
}

double passage_sum_direct(double y1, double beta, std::int64_t n, const PassageProfile& profile,
                          const ScalingParams& params, const ObstacleDensity& density) {
    if (n < 1) throw std::invalid_argument("passage_sum_direct: n must be >= 1");
    double s = 0.0;
    for (std::int64_t k = 1; k <= n; ++k) {
        s += p_passage_periodic(lower_edge_entry(y1, beta, k), beta, profile, params, density);
    }
    return s;
}

namespace {

std::complex<double> coefficient(std::int64_t k, double beta, const PassageProfile& profile,
                                 const ScalingParams& params, const LineMarginal& m) {
    const double cb = std::cos(beta);
    const double kk = static_cast<double>(k);
    const double y0 = crossing_y0(beta);
    const std::complex<double> phase = std::polar(1.0, -2.0 * kPi * kk * y0);
    return (params.sqrt_eps / cb) * phase * profile.fourier(-params.sqrt_eps * kk / cb) *
           m.fourier(params.patch_radius * kk / cb);
}

}  // namespace

FourierData fourier_data(double beta, std::int64_t k_max, const PassageProfile& profile,
                         const ScalingParams& params, const ObstacleDensity& density) {
    const LineMarginal& m = LineMarginal::get(density.kind());
    FourierData d;
    d.beta = beta;
    d.coefficients.reserve(static_cast<std::size_t>(k_max + 1));
    for (std::int64_t k = 0; k <= k_max; ++k) d.coefficients.push_back(coefficient(k, beta, profile, params, m));
    return d;
}

double dirichlet_kernel(std::int64_t m, double x) {
    const double r = x - std::round(x);
    const double n = static_cast<double>(2 * m + 1);
    if (r == 0.0) return n;
    double z = n * r;
    z -= 2.0 * std::round(z / 2.0);
    return std::sin(kPi * z) / std::sin(kPi * r);
}

FourierSum passage_sum_fourier(double y1, double beta, std::int64_t n, const PassageProfile& profile,
                               const ScalingParams& params, const ObstacleDensity& density, std::int64_t k_max) {
    if (n < 1) throw std::invalid_argument("passage_sum_fourier: n must be >= 1");
    const LineMarginal& marg = LineMarginal::get(density.kind());
    FourierSum out;
    const std::int64_t n_odd = (n % 2 == 1) ? n : n - 1;
    out.even_n_extension = n_odd != n;
    const std::int64_t m = (n_odd - 1) / 2;
    const double nn = static_cast<double>(n_odd);

    std::vector<std::complex<double>> c{coefficient(0, beta, profile, params, marg)};
    const auto extend = [&](std::int64_t upto) {
        while (static_cast<std::int64_t>(c.size()) <= upto) {
            c.push_back(coefficient(static_cast<std::int64_t>(c.size()), beta, profile, params, marg));
        }
    };
    const auto band = [&](std::int64_t lo, std::int64_t hi) {
        double s = 0.0;
        for (std::int64_t k = lo + 1; k <= hi; ++k) s += std::abs(c[static_cast<std::size_t>(k)]);
        return 2.0 * nn * s;
    };

    std::int64_t K;
    double tail;
    if (k_max > 0) {
        K = k_max;
        extend(2 * K);
        tail = band(K, 2 * K);
    } else {
        K = static_cast<std::int64_t>(std::ceil(8.0 * std::pow(params.epsilon, params.nu - 1.0)));
        constexpr std::int64_t cap = std::int64_t{1} << 21;
        const double scale = nn * std::abs(c[0]);
        for (;;) {
            extend(2 * K);
            tail = band(K, 2 * K);
            if (tail <= 1e-13 * scale || 2 * K >= cap) break;
            K *= 2;
        }
        K *= 2;
    }

    const double tb = std::tan(beta);
    const double shift = y1 + static_cast<double>(m) * tb;
    double value = nn * c[0].real();
    for (std::int64_t k = 1; k <= K; ++k) {
        const double kk = static_cast<double>(k);
        double arg = kk * shift;
        arg -= std::floor(arg);
        const std::complex<double> e = std::polar(1.0, 2.0 * kPi * arg);
        value += 2.0 * (c[static_cast<std::size_t>(k)] * e).real() * dirichlet_kernel(m, kk * tb);
    }
    if (out.even_n_extension) {
        value += p_passage_periodic(lower_edge_entry(y1, beta, n), beta, profile, params, density);
    }
    out.value = value;
    out.leading_term = params.sqrt_eps * static_cast<double>(n) / std::cos(beta) * profile.integral();
    out.remainder = out.value - out.leading_term;
    out.truncation_error = tail;
    out.k_max = K;
    out.truncation_warning = tail > 1e-8 * std::abs(value);
    return out;
}

double p0_product(double y1, double beta, std::int64_t n, const ScalingParams& params,
                  const ObstacleDensity& density) {
    if (n < 1) throw std::invalid_argument("p0_product: n must be >= 1");
    double log_sum = 0.0;
    for (std::int64_t k = 1; k <= n; ++k) {
        const double y = lower_edge_entry(y1, beta, k);
        // Each image is a different cell of the same row.
        for (int i = -2; i <= 2; ++i) {
            const double p = p_single_passage(y + i, beta, params, density);
            if (p >= 1.0) throw DegenerateCellError("p0_product: passage with collision probability 1");
            if (p > 0.0) log_sum += std::log1p(-p);
        }
    }
    return std::exp(log_sum);
}

double v0_term(const Observable& g, const PhaseState& state, double t, double rate) {
    return std::exp(-rate * t) * g(state.x + state.v * t, state.v);
}

namespace {

double v1_quadrature(const Observable& g, const PhaseState& s, double t, int n, double rate) {
    const detail::GaussRule& gl = detail::gauss_rule(n);
    // Post-collision velocities depend only on alpha; compute them once.
    std::vector<Vec2> vp(gl.x.size());
    std::vector<double> wa(gl.x.size());
    for (std::size_t j = 0; j < gl.x.size(); ++j) {
        const double alpha = 0.5 * kPi * gl.x[j];
        const double r = std::sin(alpha);
        vp[j] = specular_reflect(s.v, normal_from_impact(s.v, r));
        wa[j] = 0.5 * kPi * gl.w[j] * std::cos(alpha);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
        const double tau = 0.5 * t * (1.0 + gl.x[i]);
        const double wt = 0.5 * t * gl.w[i];
        const Vec2 xj = s.x + s.v * tau;
        double inner = 0.0;
        for (std::size_t j = 0; j < vp.size(); ++j) inner += wa[j] * g(xj + vp[j] * (t - tau), vp[j]);
        acc += wt * inner;
    }
    return 0.5 * rate * std::exp(-rate * t) * acc;
}

}  // namespace

QuadratureResult v1_term(const Observable& g, const PhaseState& state, double t, int quad_nodes, double rate) {
    if (quad_nodes < 16) throw std::invalid_argument("v1_term: quad_nodes must be >= 16");
    QuadratureResult out;
    if (t <= 0.0) return out;
    out.value = v1_quadrature(g, state, t, quad_nodes, rate);
    out.error_estimate = std::abs(out.value - v1_quadrature(g, state, t, quad_nodes / 2, rate));
    out.quadrature_warning = out.error_estimate > 1e-6 * std::abs(out.value);
    return out;
}

nlohmann::ordered_json oracle_record(nlohmann::ordered_json inputs, double value, double error_estimate,
                                     const std::string& method) {
    nlohmann::ordered_json j;
    j["inputs"] = std::move(inputs);
    j["value"] = value;
    j["error_estimate"] = error_estimate;
    j["method"] = method;
    return j;
}

}  // namespace lorentz
