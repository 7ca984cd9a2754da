#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "eklab/grid.hpp"
#include "eklab/torus.hpp"

namespace eklab {

// An entropy Phi on the unit circle. `circle(theta)` returns Phi(e^{i theta})
// with the normalization kappa already applied.
struct Entropy {
    std::string name;
    double kappa = 1.0;
    std::optional<TorusFunction> generator;        // psi with Phi = kappa * Phi^psi
    std::function<Vec2(double)> circle;
    std::function<Vec2(double)> circle_derivative;  // d/dtheta Phi(e^{i theta}), optional
    std::function<Vec2(Vec2)> extension;            // polynomial extension to R^2, optional

    Vec2 operator()(double theta) const { return circle(theta); }
    bool has_extension() const { return static_cast<bool>(extension); }
    // Phi(m) for a plane vector: the extension when present, else Phi(m/|m|).
    Vec2 flux(Vec2 m) const;
};

// kappa * int_{w.e^{is} > 0} psi(s) e^{is} ds, integrated over the half circle
// centred at arg(w) with Gauss-Legendre panels. Rejects generators whose first
// moment int psi e^{is} ds does not vanish.
Vec2 phi_from_psi(const TorusFunction& psi, Vec2 w, double kappa = 1.0);
Vec2 phi_from_psi_angle(const TorusFunction& psi, double theta, double kappa = 1.0);

// psi(s) = -1/2 e^{is} . d/ds Phi(i e^{is}) with a five-point stencil of step pi/n.
double psi_from_phi(const std::function<Vec2(double)>& phi_on_circle, double s, int n = 4096);
// Tabulates psi on `samples` points; throws when the result is not pi-periodic
// (Phi not odd).
TorusFunction psi_table_from_phi(const std::function<Vec2(double)>& phi_on_circle, int samples = 256,
                                 int stencil_n = 4096);

Entropy identity_entropy(double kappa = 1.0);

enum class JinKohnConvention { ent_fixed, literal };
std::pair<Entropy, Entropy> jin_kohn_pair(double kappa, JinKohnConvention convention = JinKohnConvention::ent_fixed);

// Entropy generated by a psi table; Phi is tabulated once and evaluated by
// cubic Hermite interpolation using the exact angular derivative.
Entropy entropy_from_psi(const TorusFunction& psi, double kappa, std::string name);

// Names: id, jk1, jk2, jk1-literal, jk2-literal, psi:<path>.
Entropy entropy_by_name(const std::string& name, double kappa);
// Two-column ASCII table "s psi(s)" on a uniform grid starting at 0.
TorusFunction read_psi_table(const std::filesystem::path& path);

struct TangencyReport {
    double defect = 0.0;          // sup |e^{i theta} . dPhi/dtheta|
    double defect_theta = 0.0;    // where the sup is attained
    std::vector<double> lambda;   // ie^{i theta} . dPhi/dtheta on the theta grid
};

TangencyReport ent_tangency_defect(const Entropy& phi, int n = 1024);

// div Phi(m) by central differences; the flux lives on region & mask and the
// divergence is reported on cells whose four neighbours are in that set.
ScalarField entropy_production(const AngleField& m, const Entropy& phi, const std::optional<Mask>& region = std::nullopt);
ScalarField entropy_production(const VectorField2& m, const Entropy& phi, const std::optional<Mask>& region = std::nullopt);

// (Phi(m+) - Phi(m-)) . nu for a jump with continuous normal component.
double jump_flux(Vec2 m_minus, Vec2 m_plus, Vec2 nu, const Entropy& phi);

struct ScalingCheck {
    double lhs = 0.0;        // ||div Phi(m_r)||_{L^p(B_1)}
    double rhs = 0.0;        // r^{1-2/p} ||div Phi(m)||_{L^p(B_r)}
    double prefactor = 0.0;  // r^{1-2/p}
};

// Balls are centred at the origin; m_r is sampled on `target`.
ScalingCheck scaling_check(const AngleField& m, const Entropy& phi, double r, double p, const Grid2& target);

}  // namespace eklab
