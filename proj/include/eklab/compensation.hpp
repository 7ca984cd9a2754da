#pragma once

#include <optional>
#include <vector>

#include "eklab/grid.hpp"
#include "eklab/kernel.hpp"
#include "eklab/kinetic.hpp"
#include "eklab/quadrature.hpp"

namespace eklab {

enum class XiMethod { double_quadrature, closed_form };

// Xi^phi(z1, z2) for unit vectors given by their angles.
double xi_phi(const TestKernel& phi, double theta1, double theta2, XiMethod method, const quad::Options& opt = {});
double xi_phi(const TestKernel& phi, Vec2 z1, Vec2 z2, XiMethod method, const quad::Options& opt = {});
// Closed form Xi^phi(e^{-i beta}, e^{i beta}), beta in [0, pi/2].
double xi_closed(const TestKernel& phi, double beta, const quad::Options& opt = {});

// omega_phi(t) = t int_0^{t/4} s phi(s) ds.
double omega_phi(const TestKernel& phi, double t);

struct CoercivityReport {
    double c = 0.0;              // min over the beta grid of Xi / omega(2 sin beta)
    double beta_at_min = 0.0;
    std::vector<double> beta;
    std::vector<double> ratio;
};

// beta_k = k (pi/2) / n for k = 1..n.
CoercivityReport coercivity_report(const TestKernel& phi, int n_beta = 512, const quad::Options& opt = {});

// Delta^{phi,chi}(x, h) = 1/2 Xi(m(x), m(x+h)) on cells where x, x+h lie in region & mask.
ScalarField delta_field(const AngleField& m, const TestKernel& phi, Vec2 h,
                        const std::optional<Mask>& region = std::nullopt);
// Same quantity from the definition: double quadrature of phi(t-s) D^h chi(t) D^h chi(s) sin(t-s).
ScalarField delta_field_direct(const AngleField& m, const TestKernel& phi, Vec2 h,
                               const std::optional<Mask>& region = std::nullopt);

// A^tau by T^2 quadrature split at indicator jumps; tau must be a multiple of hx.
VectorField2 a_field(const AngleField& m, const TestKernel& phi, double tau,
                     const std::optional<Mask>& region = std::nullopt);
// Pointwise A^tau for the pair (m(x), m(x + tau e1)) given by angles.
Vec2 a_value(const TestKernel& phi, double theta_x, double theta_shift, const quad::Options& opt = {});

// G(e^{i alpha}, e^{i theta}) = int_{theta-pi/2}^{theta+pi/2} phi'(t - alpha) sin t dt
double g_func(const TestKernel& phi, double alpha, double theta);
// H(e^{i theta}, e^{i alpha}) = phi(alpha) cos(theta + alpha) + int_0^alpha phi(t) sin(theta + t) dt
double h_func(const TestKernel& phi, double theta, double alpha);
// |1/2 (G(iz, e^{i beta} z) - G(iz, z)) - H(z, e^{i beta})| for z = e^{i theta}
double gh_identity_check(const TestKernel& phi, double theta, double beta);

// I^tau for sigma = (delta_{theta+pi/2} + delta_{theta-pi/2}) F:
// I1 + I2 - D^tau I3 with the G/H closed forms. Angles of m(x+tau)/m(x) use
// the principal branch.
ScalarField i_field(const AngleField& m, const ScalarField& F, const TestKernel& phi, double tau,
                    const std::optional<Mask>& region = std::nullopt);
// I^tau for a sampled (chi, sigma) pair on the s-grid, with the s-integrals of
// Theta realized as int phi'(t-s) sigma(s) ds.
ScalarField i_field(const KineticField& chi, const KineticDensity& sigma, const TestKernel& phi, double tau,
                    const std::optional<Mask>& region = std::nullopt);

struct ResidualReport {
    double lhs = 0.0;       // - int int Delta eta rho'
    double rhs = 0.0;       // int int (I eta - A . grad eta) rho
    double residual = 0.0;  // |lhs - rhs|
    int tau_steps = 0;
};

// Weak form of d/dtau Delta = I + div A against eta(x) rho(tau), all s-integrals
// on the kinetic s-grid. sigma may be parametric (delta masses) or sampled.
ResidualReport comp_identity_residual(const KineticField& chi, const std::optional<KineticDensity>& sigma,
                                      const TestKernel& phi, const TestFunction& eta, const TestFunction& rho,
                                      double tau_max);

struct BootstrapRow {
    double tau = 0.0;
    double lhs = 0.0;          // int Delta(x, tau e1) eta^2
    double holder_term = 0.0;
    double phi1_term = 0.0;
    double layer_term = 0.0;
    double C_tau = 0.0;        // int |D^tau m|^{3p} eta^2 / tau^p
    double coercivity_c = 0.0;
    double structure = 0.0;    // int |D^tau m|^{3p} eta^2
    double link_bound = 0.0;   // (2 L / c) int Delta eta^2
};

struct BootstrapReport {
    double r0 = 0.0;
    double gamma = 0.0;
    std::vector<BootstrapRow> rows;
};

// Requested tau values are snapped to the nearest positive multiple of hx.
BootstrapReport besov_bootstrap(const AngleField& m, const std::optional<ScalarField>& F, double p,
                                const RegionSpec& regions, const TestFunction& eta, const std::vector<double>& taus);

}  // namespace eklab
