#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lorentz/density.hpp"
#include "lorentz/dynamics.hpp"
#include "lorentz/scaling.hpp"

namespace lorentz {

/// Line marginal phi_0(x1) = int phi(x1, x2) dx2 of a rotationally symmetric
/// obstacle density, supported on [-1, 1].
///
/// uniform-disk: closed forms. smooth-bump: values and derivatives at 4097
/// knots from tanh-sinh quadrature of the chord integral, cubic Hermite in
/// between; the CDF is accumulated with Gauss-Legendre panels. The Fourier
/// transform is the Hankel transform 2 pi int phi(r) J0(2 pi f r) r dr, which
/// never touches the tables.
class LineMarginal {
public:
    static constexpr int kKnots = 4096;

    static const LineMarginal& get(DensityKind kind);

    DensityKind kind() const { return kind_; }
    double density(double x) const;
    double cdf(double x) const;
    /// phi_0 hat(f) = int phi_0(x) e^{-2 pi i f x} dx (real by symmetry).
    double fourier(double f) const;

private:
    explicit LineMarginal(DensityKind kind);

    DensityKind kind_;
    std::vector<double> value_;  // phi_0 at knots
    std::vector<double> slope_;  // phi_0' at knots
    std::vector<double> cdf_;    // F_0 at knots
    std::vector<double> hankel_r_;
    std::vector<double> hankel_w_;  // 2 pi w_i phi(r_i) r_i
};

/// The function psi_0 of the passage sums: either the indicator of [-1, 1]
/// (collision probability) or a piecewise-linear table on [-1, 1] that is
/// zero outside.
class PassageProfile {
public:
    static PassageProfile indicator();
    /// Knots must be strictly increasing inside [-1, 1].
    static PassageProfile tabulated(std::vector<double> knots, std::vector<double> values);

    bool is_indicator() const { return indicator_; }
    double operator()(double s) const;
    double integral() const;
    double l1_norm() const;
    /// psi_0 hat(f) = int psi_0(s) e^{-2 pi i f s} ds.
    std::complex<double> fourier(double f) const;

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

private:
    bool indicator_{true};
    std::vector<double> knots_;
    std::vector<double> values_;
};

/// Collision probability for one passage through a cell: the path crosses the
/// lower edge line at y with canonical angle beta, so it passes the cell centre
/// at signed distance rho = (y - y0) cos(beta), y0 = -tan(beta)/2. Not periodised.
double p_single_passage(double y, double beta, const ScalingParams& params, const ObstacleDensity& density);

/// Same for a general profile: int psi_0(x / sqrt(eps)) phi_eps(rho + x) dx.
double p_passage(double y, double beta, const PassageProfile& profile, const ScalingParams& params,
                 const ObstacleDensity& density);

/// One-periodic extension of p_passage in y.
double p_passage_periodic(double y, double beta, const PassageProfile& profile, const ScalingParams& params,
                          const ObstacleDensity& density);

/// sum_{k=1}^n p(y_k, beta), y_k = lower_edge_entry(y1, beta, k).
double passage_sum_direct(double y1, double beta, std::int64_t n, const PassageProfile& profile,
                          const ScalingParams& params, const ObstacleDensity& density);

/// Fourier coefficients p hat_k, k = 0..k_max, of the periodised passage function.
struct FourierData {
    double beta{0.0};
    std::vector<std::complex<double>> coefficients;
};

FourierData fourier_data(double beta, std::int64_t k_max, const PassageProfile& profile,
                         const ScalingParams& params, const ObstacleDensity& density);

/// D_m(x) = sin((2m+1) pi x) / sin(pi x), equal to 2m+1 at integers.
double dirichlet_kernel(std::int64_t m, double x);

struct FourierSum {
    double value{0.0};
    double leading_term{0.0};
    double remainder{0.0};         // R_a = value - leading_term
    double truncation_error{0.0};  // tail estimate beyond k_max
    std::int64_t k_max{0};
    bool truncation_warning{false};  // tail estimate > 1e-8 |value|
    bool even_n_extension{false};    // n even: last term added directly
};

/// Passage sum through the Dirichlet-kernel identity. k_max <= 0 selects it
/// automatically, starting at ceil(8 eps^(nu-1)) and doubling until the tail
/// estimate is negligible.
FourierSum passage_sum_fourier(double y1, double beta, std::int64_t n, const PassageProfile& profile,
                               const ScalingParams& params, const ObstacleDensity& density,
                               std::int64_t k_max = 0);

/// prod_{j=1}^n (1 - p(y_j, beta)). Throws DegenerateCellError if some p_j >= 1.
double p0_product(double y1, double beta, std::int64_t n, const ScalingParams& params,
                  const ObstacleDensity& density);

/// Bounded test function g(x, v) on the macroscopic phase space.
using Observable = std::function<double(Vec2 x, Vec2 v)>;

/// e^{-rate t} g(x + t v, v).
double v0_term(const Observable& g, const PhaseState& state, double t, double rate = 2.0);

struct QuadratureResult {
    double value{0.0};
    double error_estimate{0.0};
    bool quadrature_warning{false};  // error estimate > 1e-6 |value|
};

/// (rate/2) e^{-rate t} int_0^t int_{-1}^{1} g(x + tau v + (t - tau) v', v') dr dtau,
/// v' the velocity after scattering with impact parameter r. Tensor
/// Gauss-Legendre with quad_nodes points per axis (r = sin(alpha) removes the
/// endpoint singularity); the error estimate compares with quad_nodes / 2.
QuadratureResult v1_term(const Observable& g, const PhaseState& state, double t, int quad_nodes = 64,
                         double rate = 2.0);

/// JSON record {inputs, value, error_estimate, method}.
nlohmann::ordered_json oracle_record(nlohmann::ordered_json inputs, double value, double error_estimate,
                                     const std::string& method);

}  // namespace lorentz
