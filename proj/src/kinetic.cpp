#include "eklab/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace eklab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_separable(const Separable& d, const Grid2& g, int ns) {
    if (d.coef.size() != d.basis.size()) throw PreconditionError("separable data: coef/basis count mismatch");
    for (std::size_t j = 0; j < d.coef.size(); ++j) {
        if (!(d.coef[j].grid == g)) throw PreconditionError("separable data: coefficient on a different grid");
        if (static_cast<int>(d.basis[j].size()) != ns) throw PreconditionError("separable data: basis length != Ns");
    }
}

// Sums per-cell contributions over `cells` row by row, deterministically.
double cell_sum(const Grid2& g, const Mask& cells, const std::function<double(int, int)>& f) {
    std::vector<double> rows(static_cast<std::size_t>(g.ny), 0.0);
    parallel_rows(g.ny, [&](int j) {
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(g.nx));
        for (int i = 0; i < g.nx; ++i) {
            if (cells.at(i, j)) vals.push_back(f(i, j));
        }
        rows[static_cast<std::size_t>(j)] = pairwise_sum(vals);
    });
    return pairwise_sum(rows);
}

// Central partial derivative along `axis` (0 = x, 1 = y); active where both
// neighbours are.
ScalarField partial(const ScalarField& f, int axis) {
    const Grid2& g = f.grid;
    Mask m(g, false);
    ScalarField out(g, m, kNaN);
    const int di = axis == 0 ? 1 : 0;
    const int dj = axis == 0 ? 0 : 1;
    const double h = axis == 0 ? g.hx : g.hy;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!f.mask.at(i, j) || !f.mask.at(i + di, j + dj) || !f.mask.at(i - di, j - dj)) continue;
            out.mask.set(i, j, true);
            out.at(i, j) = (f.at(i + di, j + dj) - f.at(i - di, j - dj)) / (2 * h);
        }
    }
    return out;
}

FieldStack stack_of(const Grid2& g, const Mask& mask, const SGrid& s,
                    const std::function<double(int, std::size_t)>& value) {
    FieldStack st;
    st.grid = g;
    st.mask = mask;
    st.s0 = s.node(0);
    st.ds = s.ds();
    st.blocks.assign(static_cast<std::size_t>(s.ns), std::vector<double>(g.size(), kNaN));
    for (int k = 0; k < s.ns; ++k) {
        auto& b = st.blocks[static_cast<std::size_t>(k)];
        for (std::size_t c = 0; c < g.size(); ++c) {
            if (mask[c]) b[c] = value(k, c);
        }
    }
    return st;
}

}  // namespace

SGrid::SGrid(int n) : ns(n) {
    if (n < 128 || n % 2 != 0) throw PreconditionError("Ns must be even and at least 128");
}

double Separable::at(int k, std::size_t cell) const {
    double v = 0.0;
    for (std::size_t j = 0; j < coef.size(); ++j) v += coef[j].values[cell] * basis[j][static_cast<std::size_t>(k)];
    return v;
}

KineticField KineticField::indicator(const AngleField& m, int ns) {
    KineticField f(Kind::indicator, m.grid, m.mask, ns);
    f.angles_ = std::make_shared<const AngleField>(m);
    return f;
}

KineticField KineticField::real(const Grid2& g, const Mask& mask, int ns, Separable data) {
    KineticField f(Kind::real, g, mask, ns);
    check_separable(data, g, ns);
    f.data_ = std::make_shared<const Separable>(std::move(data));
    return f;
}

const AngleField& KineticField::angles() const {
    if (!angles_) throw PreconditionError("kinetic field is not an indicator");
    return *angles_;
}

double KineticField::value(int k, std::size_t cell) const {
    if (kind_ == Kind::indicator) {
        // fraction of the s-cell where cos(s - theta) > 0
        const double ds = s_.ds();
        const double d = wrap_angle(s_.node(k) - angles_->theta[cell]);
        const double lo = std::max(d - 0.5 * ds, -0.5 * kPi), hi = std::min(d + 0.5 * ds, 0.5 * kPi);
        return hi > lo ? std::min(1.0, (hi - lo) / ds) : 0.0;
    }
    return data_->at(k, cell);
}

void KineticField::section(std::size_t cell, std::span<double> out) const {
    for (int k = 0; k < s_.ns; ++k) out[static_cast<std::size_t>(k)] = value(k, cell);
}

FieldStack KineticField::to_stack() const {
    return stack_of(grid_, mask_, s_, [this](int k, std::size_t c) { return value(k, c); });
}

KineticField chi_field(const AngleField& m, int ns) { return KineticField::indicator(m, ns); }

KineticDensity KineticDensity::parametric(const AngleField& theta, const ScalarField& F) {
    if (!(theta.grid == F.grid)) throw PreconditionError("parametric density: theta and F on different grids");
    KineticDensity d(Kind::parametric, theta.grid, theta.mask & F.mask, 128);
    for (std::size_t c = 0; c < F.values.size(); ++c) {
        if (d.mask_[c] && !std::isfinite(F.values[c])) throw PreconditionError("parametric density: F not finite");
    }
    d.theta_ = std::make_shared<const AngleField>(theta);
    d.F_ = std::make_shared<const ScalarField>(F);
    return d;
}

KineticDensity KineticDensity::sampled(const Grid2& g, const Mask& mask, int ns, Separable data) {
    KineticDensity d(Kind::sampled, g, mask, ns);
    check_separable(data, g, ns);
    d.data_ = std::make_shared<const Separable>(std::move(data));
    return d;
}

double KineticDensity::value(int k, std::size_t cell) const {
    if (kind_ != Kind::sampled) throw PreconditionError("parametric density has no sampled values");
    return data_->at(k, cell);
}

void KineticDensity::section(std::size_t cell, std::span<double> out) const {
    for (int k = 0; k < s_.ns; ++k) out[static_cast<std::size_t>(k)] = value(k, cell);
}

FieldStack KineticDensity::to_stack() const {
    return stack_of(grid_, mask_, s_, [this](int k, std::size_t c) { return value(k, c); });
}

KineticTest KineticTest::product(std::function<double(double)> psi, std::function<double(double)> dpsi,
                                 const TestFunction& w) {
    KineticTest z;
    z.terms.push_back({std::move(psi), std::move(dpsi), w});
    return z;
}

KineticTest KineticTest::product(const TorusFunction& psi, const TestFunction& w) {
    return product([psi](double s) { return psi(s); }, [psi](double s) { return psi.derivative(s); }, w);
}

double KineticTest::value(double s, Vec2 x) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.psi(s) * t.w.value(x);
    return v;
}

double KineticTest::ds(double s, Vec2 x) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.dpsi(s) * t.w.value(x);
    return v;
}

Vec2 KineticTest::grad_x(double s, Vec2 x) const {
    Vec2 v;
    for (const auto& t : terms) v += t.psi(s) * t.w.gradient(x);
    return v;
}

Mask KineticTest::support(const Grid2& g) const {
    Mask m(g, false);
    for (const auto& t : terms) m = m | t.w.support(g);
    return m;
}

double theta_pairing(const KineticField& chi, const KineticTest& zeta) {
    const Grid2& g = chi.grid();
    const Mask supp = zeta.support(g);
    if (!supp.subset_of(chi.mask())) throw PreconditionError("theta_pairing: test function support leaves the domain");
    const SGrid& sg = chi.sgrid();
    const auto ns = static_cast<std::size_t>(sg.ns);
    // per-term tables psi_j(s_k) e^{i s_k}
    std::vector<std::vector<Vec2>> tab(zeta.terms.size(), std::vector<Vec2>(ns));
    for (std::size_t j = 0; j < zeta.terms.size(); ++j) {
        for (std::size_t k = 0; k < ns; ++k) {
            const double s = sg.node(static_cast<int>(k));
            tab[j][k] = zeta.terms[j].psi(s) * unit(s);
        }
    }
    const double ds = sg.ds();
    return -cell_sum(g, supp, [&](int i, int j) {
               std::vector<double> sec(ns);
               const std::size_t cell = g.index(i, j);
               chi.section(cell, sec);
               const Vec2 x = g.center(i, j);
               double acc = 0.0;
               for (std::size_t t = 0; t < tab.size(); ++t) {
                   Vec2 v;
                   for (std::size_t k = 0; k < ns; ++k) v += sec[k] * tab[t][k];
                   acc += dot(v, zeta.terms[t].w.gradient(x));
               }
               return acc * ds;
           }) *
           g.cell_area();
}

double sigma_pairing(const KineticDensity& sigma, const KineticTest& zeta) {
    const Grid2& g = sigma.grid();
    const Mask supp = zeta.support(g);
    if (!supp.subset_of(sigma.mask())) throw PreconditionError("sigma_pairing: test function support leaves the domain");
    if (sigma.kind() == KineticDensity::Kind::parametric) {
        const AngleField& th = sigma.theta();
        const ScalarField& F = sigma.F();
        return -cell_sum(g, supp, [&](int i, int j) {
                   const std::size_t c = g.index(i, j);
                   const Vec2 x = g.center(i, j);
                   const double t = th.theta[c];
                   return (zeta.ds(t + kPi / 2, x) + zeta.ds(t - kPi / 2, x)) * F.values[c];
               }) *
               g.cell_area();
    }
    const SGrid& sg = sigma.sgrid();
    const auto ns = static_cast<std::size_t>(sg.ns);
    std::vector<std::vector<double>> dtab(zeta.terms.size(), std::vector<double>(ns));
    for (std::size_t j = 0; j < zeta.terms.size(); ++j) {
        for (std::size_t k = 0; k < ns; ++k) dtab[j][k] = zeta.terms[j].dpsi(sg.node(static_cast<int>(k)));
    }
    const double ds = sg.ds();
    return -cell_sum(g, supp, [&](int i, int j) {
               std::vector<double> sec(ns);
               const std::size_t cell = g.index(i, j);
               sigma.section(cell, sec);
               const Vec2 x = g.center(i, j);
               double acc = 0.0;
               for (std::size_t t = 0; t < dtab.size(); ++t) {
                   double v = 0.0;
                   for (std::size_t k = 0; k < ns; ++k) v += sec[k] * dtab[t][k];
                   acc += v * zeta.terms[t].w.value(x);
               }
               return acc * ds;
           }) *
           g.cell_area();
}

KineticPair synthetic_kinetic_pair(const ScalarField& a, const ScalarField& b, const ScalarField& c, int ns,
                                   double tol) {
    if (!(a.grid == b.grid) || !(a.grid == c.grid)) throw PreconditionError("synthetic pair: fields on different grids");
    const Grid2& g = a.grid;
    const SGrid sg(ns);
    const ScalarField a1 = partial(a, 0), a2 = partial(a, 1);
    const ScalarField b1 = partial(b, 0), b2 = partial(b, 1);
    const ScalarField c1 = partial(c, 0), c2 = partial(c, 1);
    const Mask dmask = a1.mask & a2.mask & b1.mask & b2.mask & c1.mask & c2.mask;
    if (dmask.empty()) throw PreconditionError("synthetic pair: no interior cells");

    ScalarField defect(g, dmask, kNaN);
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!dmask[k]) continue;
        defect.values[k] = a1.values[k] + b2.values[k];
        worst = std::max(worst, std::abs(defect.values[k]));
    }
    if (worst > tol) {
        std::ostringstream os;
        os << "synthetic pair: compatibility d1 a + d2 b = 0 fails, max defect " << worst;
        throw CompatibilityError(os.str(), std::move(defect));
    }

    const auto n = static_cast<std::size_t>(ns);
    auto sampled = [&](auto fn) {
        std::vector<double> v(n);
        for (std::size_t k = 0; k < n; ++k) v[k] = fn(sg.node(static_cast<int>(k)));
        return v;
    };
    Separable chi;
    chi.coef = {a, b, c};
    chi.basis = {sampled([](double s) { return std::cos(s); }), sampled([](double s) { return std::sin(s); }),
                 sampled([](double) { return 1.0; })};

    // Theta = a1 cos^2 + (a2 + b1) sin cos + b2 sin^2 + c1 cos + c2 sin
    auto restrict = [&](const ScalarField& f) {
        ScalarField r(g, dmask, kNaN);
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (dmask[k]) r.values[k] = f.values[k];
        }
        return r;
    };
    ScalarField mixed(g, dmask, kNaN);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (dmask[k]) mixed.values[k] = a2.values[k] + b1.values[k];
    }
    const std::vector<std::vector<double>> theta_basis = {
        sampled([](double s) { return std::cos(s) * std::cos(s); }),
        sampled([](double s) { return std::sin(s) * std::cos(s); }),
        sampled([](double s) { return std::sin(s) * std::sin(s); }),
        sampled([](double s) { return std::cos(s); }),
        sampled([](double s) { return std::sin(s); }),
    };
    Separable sig;
    sig.coef = {restrict(a1), mixed, restrict(b2), restrict(c1), restrict(c2)};
    const double ds = sg.ds();
    for (const auto& tb : theta_basis) {
        std::vector<double> cum(n, 0.0);
        for (std::size_t k = 1; k < n; ++k) cum[k] = cum[k - 1] + 0.5 * ds * (tb[k - 1] + tb[k]);
        sig.basis.push_back(std::move(cum));
    }
    return {KineticField::real(g, a.mask & b.mask & c.mask, ns, std::move(chi)),
            KineticDensity::sampled(g, dmask, ns, std::move(sig))};
}

KineticPair builtin_kinetic_pair(const Grid2& g, int ns) {
    const SGrid sg(ns);
    const Mask full(g, true);
    ScalarField a(g, full), b(g, full), c(g, full, 0.0), w(g, full);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 x = g.center(i, j);
            a.at(i, j) = std::sin(x.y);
            b.at(i, j) = std::sin(x.x);
            w.at(i, j) = std::cos(x.x) + std::cos(x.y);
        }
    }
    const auto n = static_cast<std::size_t>(ns);
    std::vector<double> cs(n), sn(n), one(n, 1.0), half_sin2(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = sg.node(static_cast<int>(k));
        cs[k] = std::cos(s);
        sn[k] = std::sin(s);
        half_sin2[k] = 0.5 * sn[k] * sn[k];
    }
    Separable chi{{a, b, c}, {cs, sn, one}};
    Separable sig{{w}, {half_sin2}};
    return {KineticField::real(g, full, ns, std::move(chi)), KineticDensity::sampled(g, full, ns, std::move(sig))};
}

}  // namespace eklab
