#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "eklab/field_io.hpp"
#include "eklab/grid.hpp"
#include "eklab/torus.hpp"

namespace eklab {

// Angles s_k = (k + 1/2) 2pi / Ns, offset by half a cell.
struct SGrid {
    int ns = 0;

    explicit SGrid(int n);
    double ds() const { return kTwoPi / ns; }
    double node(int k) const { return (k + 0.5) * ds(); }
};

// Separable (s, x) data: value(k, x) = sum_j coef[j](x) * basis[j][k].
struct Separable {
    std::vector<ScalarField> coef;
    std::vector<std::vector<double>> basis;

    double at(int k, std::size_t cell) const;
};

// chi(s, x) on an s-grid: either the indicator 1_{m(x).e^{is} > 0} of an
// angle field, or a real separable function. Indicator values are s-cell
// averages, so they lie in [0, 1] and are fractional only at the two jumps.
class KineticField {
public:
    enum class Kind { indicator, real };

    static KineticField indicator(const AngleField& m, int ns);
    static KineticField real(const Grid2& g, const Mask& mask, int ns, Separable data);

    Kind kind() const { return kind_; }
    const SGrid& sgrid() const { return s_; }
    const Grid2& grid() const { return grid_; }
    const Mask& mask() const { return mask_; }
    // Source angles of an indicator field.
    const AngleField& angles() const;

    double value(int k, std::size_t cell) const;
    void section(std::size_t cell, std::span<double> out) const;
    FieldStack to_stack() const;

private:
    KineticField(Kind kind, const Grid2& g, const Mask& mask, int ns) : kind_(kind), s_(ns), grid_(g), mask_(mask) {}

    Kind kind_;
    SGrid s_;
    Grid2 grid_;
    Mask mask_;
    std::shared_ptr<const AngleField> angles_;
    std::shared_ptr<const Separable> data_;
};

KineticField chi_field(const AngleField& m, int ns);

// sigma: parametric (delta masses at theta +- pi/2 with weight F) or sampled.
class KineticDensity {
public:
    enum class Kind { parametric, sampled };

    static KineticDensity parametric(const AngleField& theta, const ScalarField& F);
    static KineticDensity sampled(const Grid2& g, const Mask& mask, int ns, Separable data);

    Kind kind() const { return kind_; }
    const Grid2& grid() const { return grid_; }
    const Mask& mask() const { return mask_; }
    const AngleField& theta() const { return *theta_; }
    const ScalarField& F() const { return *F_; }
    const SGrid& sgrid() const { return s_; }
    double value(int k, std::size_t cell) const;
    void section(std::size_t cell, std::span<double> out) const;
    FieldStack to_stack() const;

private:
    KineticDensity(Kind kind, const Grid2& g, const Mask& mask, int ns) : kind_(kind), s_(ns), grid_(g), mask_(mask) {}

    Kind kind_;
    SGrid s_;
    Grid2 grid_;
    Mask mask_;
    std::shared_ptr<const AngleField> theta_;
    std::shared_ptr<const ScalarField> F_;
    std::shared_ptr<const Separable> data_;
};

// zeta(s, x) = sum_j psi_j(s) w_j(x).
struct KineticTest {
    struct Term {
        std::function<double(double)> psi;
        std::function<double(double)> dpsi;
        TestFunction w;
    };
    std::vector<Term> terms;

    static KineticTest product(std::function<double(double)> psi, std::function<double(double)> dpsi,
                               const TestFunction& w);
    static KineticTest product(const TorusFunction& psi, const TestFunction& w);

    double value(double s, Vec2 x) const;
    double ds(double s, Vec2 x) const;
    Vec2 grad_x(double s, Vec2 x) const;
    Mask support(const Grid2& g) const;
};

// <Theta, zeta> = - sum chi e^{is} . grad_x zeta  (midpoint in s, cell sum in x).
double theta_pairing(const KineticField& chi, const KineticTest& zeta);
// <d_s sigma, zeta> = - <sigma, d_s zeta>.
double sigma_pairing(const KineticDensity& sigma, const KineticTest& zeta);

struct KineticPair {
    KineticField chi;
    KineticDensity sigma;
};

// Raised when d1 a + d2 b does not vanish; carries the defect field.
class CompatibilityError : public PreconditionError {
public:
    CompatibilityError(const std::string& what, ScalarField defect)
        : PreconditionError(what), defect(std::move(defect)) {}
    ScalarField defect;
};

// chi = a cos s + b sin s + c with sigma the s-cumulative trapezoid of
// Theta = e^{is} . grad_x chi (central differences in x).
KineticPair synthetic_kinetic_pair(const ScalarField& a, const ScalarField& b, const ScalarField& c, int ns,
                                   double tol = 1e-8);
// a = sin x2, b = sin x1, c = 0 with sigma = 1/2 sin^2 s (cos x1 + cos x2) in closed form.
KineticPair builtin_kinetic_pair(const Grid2& g, int ns);

}  // namespace eklab
