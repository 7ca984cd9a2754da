#include "eklab/compensation.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <sstream>

namespace eklab {

namespace {

using cd = std::complex<double>;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ------------------------------------------------------------------ arcs

struct Arc {
    double a = 0.0;
    double b = 0.0;
    double v = 0.0;
};

bool positive(double t, double theta) { return std::cos(t - theta) > 0.0; }

// Pieces of T where 1_{e^{it}.z2>0} - 1_{e^{it}.z1>0} is nonzero.
std::vector<Arc> difference_arcs(double th1, double th2) {
    const double base = th1 - kPi / 2;
    auto rel = [&](double t) {
        double r = std::fmod(t - base, kTwoPi);
        if (r < 0) r += kTwoPi;
        return r;
    };
    std::vector<double> pts = {0.0, kPi, rel(th2 - kPi / 2), rel(th2 + kPi / 2), kTwoPi};
    std::sort(pts.begin(), pts.end());
    std::vector<Arc> arcs;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double lo = pts[k], hi = pts[k + 1];
        if (hi - lo < 1e-15) continue;
        const double mid = base + 0.5 * (lo + hi);
        const double v = (positive(mid, th2) ? 1.0 : 0.0) - (positive(mid, th1) ? 1.0 : 0.0);
        if (v != 0.0) arcs.push_back({base + lo, base + hi, v});
    }
    return arcs;
}

Arc half_circle(double theta) { return {theta - kPi / 2, theta + kPi / 2, 1.0}; }

quad::Options inner_options(const quad::Options& opt) {
    quad::Options o = opt;
    o.grade_levels = std::max(o.grade_levels, 3);
    return o;
}

// int_{t in A} int_{s in B} f(t, s) ds dt where f is smooth away from t - s in (pi/4) Z.
template <class F>
double arc_pair_integral(const TestKernel& phi, const Arc& A, const Arc& B, F&& f, const quad::Options& opt) {
    const quad::Options in_opt = inner_options(opt);
    std::vector<double> outer_breaks;
    phi.seams(A.a, A.b, B.a, outer_breaks);
    phi.seams(A.a, A.b, B.b, outer_breaks);
    auto inner = [&](double t) {
        std::vector<double> br;
        phi.seams(B.a, B.b, t, br);
        return quad::integrate([&](double s) { return f(t, s); }, B.a, B.b, br, in_opt);
    };
    return quad::integrate(inner, A.a, A.b, outer_breaks, opt);
}

double half_angle(double th1, double th2) { return 0.5 * std::abs(wrap_angle(th2 - th1)); }

// ------------------------------------------------------------------ helpers

Mask effective_mask(const Mask& m, const std::optional<Mask>& region) { return region ? (m & *region) : m; }

int lattice_steps(const Grid2& g, double tau) {
    int di = 0, dj = 0;
    if (!on_lattice(g, {tau, 0.0}, &di, &dj)) throw PreconditionError("tau must be a multiple of hx");
    return di;
}

double cell_sum(const Grid2& g, const Mask& cells, const std::function<double(int, int)>& f) {
    std::vector<double> rows(static_cast<std::size_t>(g.ny), 0.0);
    parallel_rows(g.ny, [&](int j) {
        std::vector<double> vals;
        for (int i = 0; i < g.nx; ++i) {
            if (cells.at(i, j)) vals.push_back(f(i, j));
        }
        rows[static_cast<std::size_t>(j)] = pairwise_sum(vals);
    });
    return pairwise_sum(rows);
}

// ------------------------------------------------------------------ s-lattice spectra

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Bilinear forms on the s-grid evaluated through half spectra of real sequences.
class SLattice {
public:
    SLattice(int ns, const TestKernel& phi) : n_(ns), nh_(ns / 2 + 1), ds_(kTwoPi / ns) {
        std::vector<double> in(static_cast<std::size_t>(n_));
        std::vector<cd> out(static_cast<std::size_t>(nh_));
        {
            std::lock_guard lock(fftw_planner_mutex());
            plan_ = fftw_plan_dft_r2c_1d(n_, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                         FFTW_ESTIMATE | FFTW_UNALIGNED);
        }
        auto spectrum = [&](auto fn) {
            for (int m = 0; m < n_; ++m) in[static_cast<std::size_t>(m)] = fn(m * ds_);
            std::vector<cd> s(static_cast<std::size_t>(nh_));
            forward(in.data(), s.data());
            return s;
        };
        kdelta_ = spectrum([&](double u) { return phi(u) * std::sin(u); });
        kphi_ = spectrum([&](double u) { return phi(u); });
        kdphi_ = spectrum([&](double u) { return phi.derivative(u); });
        weight_.assign(static_cast<std::size_t>(nh_), 2.0);
        weight_.front() = 1.0;
        weight_.back() = 1.0;
        const double d = 0.5 * ds_;
        up_ = std::polar(1.0, d);
    }
    ~SLattice() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    SLattice(const SLattice&) = delete;
    SLattice& operator=(const SLattice&) = delete;

    int n() const { return n_; }
    int nh() const { return nh_; }
    double ds() const { return ds_; }

    void forward(const double* in, cd* out) const {
        fftw_execute_dft_r2c(plan_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
    }

    // Spectral data of one x-cell.
    struct Cell {
        std::vector<cd> X, SX, CX, K;
        double J = 0.0;
        bool ready = false;
    };

    // chi samples and optional K(t) = int phi'(t-s) sigma(ds) given either as
    // t-samples (k_samples) or as sigma samples (sigma_samples).
    void fill(const std::vector<double>& chi, const std::vector<double>* k_samples,
              const std::vector<double>* sigma_samples, Cell& c) const {
        const auto nh = static_cast<std::size_t>(nh_);
        c.X.resize(nh);
        c.SX.resize(nh);
        c.CX.resize(nh);
        forward(chi.data(), c.X.data());
        modulate(c.X, c.SX, c.CX);
        c.K.assign(nh, cd{});
        c.J = 0.0;
        if (k_samples) {
            forward(k_samples->data(), c.K.data());
        } else if (sigma_samples) {
            forward(sigma_samples->data(), c.K.data());
            for (std::size_t n = 0; n < nh; ++n) c.K[n] *= kdphi_[n] * ds_;
        }
        if (k_samples || sigma_samples) c.J = ds_ * inner(c.SX, c.K);
        c.ready = true;
    }

    // (1/N) sum over the full spectrum of conj(F) G, real part.
    double inner(const std::vector<cd>& F, const std::vector<cd>& G) const {
        double acc = 0.0;
        for (std::size_t n = 0; n < F.size(); ++n) acc += weight_[n] * (std::conj(F[n]) * G[n]).real();
        return acc / n_;
    }

    double delta(const Cell& x, const Cell& y) const {
        double acc = 0.0;
        for (std::size_t n = 0; n < x.X.size(); ++n) acc += weight_[n] * kdelta_[n].real() * std::norm(y.X[n] - x.X[n]);
        return 0.5 * ds_ * ds_ * acc / n_;
    }

    Vec2 a(const Cell& x, const Cell& y) const {
        double a1 = 0.0, a2 = 0.0;
        for (std::size_t n = 0; n < x.X.size(); ++n) {
            a1 += weight_[n] * (std::conj(y.SX[n]) * kphi_[n] * (y.CX[n] - x.CX[n])).real();
            a2 += weight_[n] * (std::conj(x.SX[n]) * kphi_[n] * (y.SX[n] - x.SX[n])).real();
        }
        return {ds_ * ds_ * a1 / n_, ds_ * ds_ * a2 / n_};
    }

    double i_term(const Cell& x, const Cell& y) const {
        double acc = 0.0;
        for (std::size_t n = 0; n < x.X.size(); ++n) {
            acc += weight_[n] * (std::conj(y.SX[n] - x.SX[n]) * (x.K[n] + y.K[n])).real();
        }
        return ds_ * acc / n_ - (y.J - x.J);
    }

private:
    // Spectra of sin(s_k) f_k and cos(s_k) f_k from the half spectrum of f.
    void modulate(const std::vector<cd>& F, std::vector<cd>& S, std::vector<cd>& C) const {
        const int nh = nh_;
        auto at = [&](int n) -> cd {
            if (n < 0) return std::conj(F[static_cast<std::size_t>(-n)]);
            if (n >= nh) return std::conj(F[static_cast<std::size_t>(n_ - n)]);
            return F[static_cast<std::size_t>(n)];
        };
        const cd down = std::conj(up_);
        const cd half_i(0.0, 0.5);
        for (int n = 0; n < nh; ++n) {
            const cd lo = up_ * at(n - 1);
            const cd hi = down * at(n + 1);
            C[static_cast<std::size_t>(n)] = 0.5 * (lo + hi);
            S[static_cast<std::size_t>(n)] = -half_i * (lo - hi);
        }
    }

    int n_;
    int nh_;
    double ds_;
    fftw_plan plan_{};
    std::vector<cd> kdelta_, kphi_, kdphi_;
    std::vector<double> weight_;
    cd up_;
};

// Fills spectral cells for row j on columns [i0, i1].
void fill_row(const SLattice& lat, const KineticField& chi, const std::optional<KineticDensity>& sigma,
              const TestKernel& phi, int j, int i0, int i1, std::vector<SLattice::Cell>& cells) {
    const Grid2& g = chi.grid();
    const auto n = static_cast<std::size_t>(lat.n());
    std::vector<double> sec(n), aux(n);
    const SGrid sg(lat.n());
    for (int i = i0; i <= i1; ++i) {
        auto& c = cells[static_cast<std::size_t>(i - i0)];
        const std::size_t cell = g.index(i, j);
        chi.section(cell, sec);
        if (!sigma) {
            lat.fill(sec, nullptr, nullptr, c);
        } else if (sigma->kind() == KineticDensity::Kind::parametric) {
            const double th = sigma->theta().theta[cell];
            const double F = sigma->F().values[cell];
            for (std::size_t k = 0; k < n; ++k) {
                aux[k] = 2.0 * F * phi.derivative(sg.node(static_cast<int>(k)) - th - kPi / 2);
            }
            lat.fill(sec, &aux, nullptr, c);
        } else {
            sigma->section(cell, aux);
            lat.fill(sec, nullptr, &aux, c);
        }
    }
}

}  // namespace

// ------------------------------------------------------------------ Xi

double xi_closed(const TestKernel& phi, double beta, const quad::Options& opt) {
    if (beta < 0.0 || beta > kPi / 2 + 1e-12) throw PreconditionError("xi_closed: beta outside [0, pi/2]");
    if (beta == 0.0) return 0.0;
    const double q = kPi / 4;
    if (beta <= q) {
        const double br[] = {q};
        return 8.0 * quad::integrate([&](double t) { return phi(t) * (2 * beta - t) * std::sin(t); }, 0.0, 2 * beta,
                                     br, opt);
    }
    const double br[] = {q, kPi - 2 * beta};
    return 8.0 * quad::integrate(
                     [&](double t) { return phi(t) * std::min(2 * beta - t, kPi - 2 * t) * std::sin(t); }, 0.0,
                     kPi / 2, br, opt);
}

double xi_phi(const TestKernel& phi, double theta1, double theta2, XiMethod method, const quad::Options& opt) {
    if (method == XiMethod::closed_form) return xi_closed(phi, half_angle(theta1, theta2), opt);
    const auto arcs = difference_arcs(theta1, theta2);
    double acc = 0.0;
    for (const Arc& A : arcs) {
        for (const Arc& B : arcs) {
            acc += A.v * B.v * arc_pair_integral(phi, A, B,
                                                 [&](double t, double s) { return phi(t - s) * std::sin(t - s); }, opt);
        }
    }
    return acc;
}

double xi_phi(const TestKernel& phi, Vec2 z1, Vec2 z2, XiMethod method, const quad::Options& opt) {
    return xi_phi(phi, std::atan2(z1.y, z1.x), std::atan2(z2.y, z2.x), method, opt);
}

double omega_phi(const TestKernel& phi, double t) {
    if (t < 0.0 || t > 2.0 + 1e-12) throw PreconditionError("omega_phi: t outside [0, 2]");
    if (t == 0.0) return 0.0;
    if (phi.kind() == TestKernel::Kind::power && !phi.regularized()) {
        const double g = phi.gamma();
        return std::pow(t, g + 3) / ((g + 2) * std::pow(4.0, g + 2));
    }
    quad::Options opt;
    opt.grade_levels = 8;
    return t * quad::integrate([&](double s) { return s * phi(s); }, 0.0, t / 4, {}, opt);
}

CoercivityReport coercivity_report(const TestKernel& phi, int n_beta, const quad::Options& opt) {
    if (n_beta < 1) throw PreconditionError("coercivity_report: empty beta grid");
    CoercivityReport r;
    r.c = std::numeric_limits<double>::infinity();
    bool any = false;
    for (int k = 1; k <= n_beta; ++k) {
        const double beta = k * (kPi / 2) / n_beta;
        const double w = omega_phi(phi, 2 * std::sin(beta));
        const double xi = xi_closed(phi, beta, opt);
        const double ratio = w > 0.0 ? xi / w : std::numeric_limits<double>::infinity();
        if (w > 0.0) any = true;
        r.beta.push_back(beta);
        r.ratio.push_back(ratio);
        if (ratio < r.c) {
            r.c = ratio;
            r.beta_at_min = beta;
        }
    }
    if (!any) throw PreconditionError("coercivity_report: omega_phi vanishes identically");
    if (!(r.c > 0.0)) throw NumericalError("coercivity_report: non-positive coercivity ratio");
    return r;
}

// ------------------------------------------------------------------ Delta

namespace {

ScalarField delta_impl(const AngleField& m, const TestKernel& phi, Vec2 h, const std::optional<Mask>& region,
                       XiMethod method) {
    const VectorField2 shifted = finite_difference(m, h, DiffMode::T, region);
    const Grid2& g = m.grid;
    ScalarField out(g, shifted.mask, kNaN);
    parallel_rows(g.ny, [&](int j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!shifted.mask.at(i, j)) continue;
            const Vec2 z2 = shifted.at(i, j);
            out.at(i, j) = 0.5 * xi_phi(phi, m.at(i, j), std::atan2(z2.y, z2.x), method);
        }
    });
    return out;
}

}  // namespace

ScalarField delta_field(const AngleField& m, const TestKernel& phi, Vec2 h, const std::optional<Mask>& region) {
    return delta_impl(m, phi, h, region, XiMethod::closed_form);
}

ScalarField delta_field_direct(const AngleField& m, const TestKernel& phi, Vec2 h,
                               const std::optional<Mask>& region) {
    return delta_impl(m, phi, h, region, XiMethod::double_quadrature);
}

// ------------------------------------------------------------------ A

Vec2 a_value(const TestKernel& phi, double theta_x, double theta_shift, const quad::Options& opt) {
    const auto darcs = difference_arcs(theta_x, theta_shift);
    double a1 = 0.0, a2 = 0.0;
    const Arc tshift = half_circle(theta_shift);
    const Arc tx = half_circle(theta_x);
    for (const Arc& B : darcs) {
        a1 += B.v * arc_pair_integral(
                        phi, tshift, B, [&](double t, double s) { return phi(t - s) * std::sin(t) * std::cos(s); }, opt);
        a2 += B.v * arc_pair_integral(
                        phi, tx, B, [&](double t, double s) { return phi(t - s) * std::sin(t) * std::sin(s); }, opt);
    }
    return {a1, a2};
}

VectorField2 a_field(const AngleField& m, const TestKernel& phi, double tau, const std::optional<Mask>& region) {
    const Grid2& g = m.grid;
    const int k = lattice_steps(g, tau);
    const Mask active = effective_mask(m.mask, region);
    const Mask valid = active.shifted_intersection(k, 0);
    if (valid.empty()) throw PreconditionError("a_field: no cells with x and x + tau e1 in the region");
    VectorField2 out(g, valid);
    quad::Options opt;
    opt.points = 12;
    opt.max_panel = kPi / 8;
    parallel_rows(g.ny, [&](int j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!valid.at(i, j)) continue;
            out.put(i, j, a_value(phi, m.at(i, j), m.at(i + k, j), opt));
        }
    });
    return out;
}

// ------------------------------------------------------------------ G, H

double g_func(const TestKernel& phi, double alpha, double theta) {
    const double a = theta - kPi / 2, b = theta + kPi / 2;
    std::vector<double> br;
    phi.seams(a, b, alpha, br);
    quad::Options opt;
    opt.grade_levels = phi.regularized() ? 14 : 2;
    return quad::integrate([&](double t) { return phi.derivative(t - alpha) * std::sin(t); }, a, b, br, opt);
}

double h_func(const TestKernel& phi, double theta, double alpha) {
    const double lo = std::min(0.0, alpha), hi = std::max(0.0, alpha);
    std::vector<double> br;
    phi.seams(lo, hi, 0.0, br);
    const double integral = quad::integrate([&](double t) { return phi(t) * std::sin(theta + t); }, lo, hi, br);
    return phi(alpha) * std::cos(theta + alpha) + (alpha >= 0.0 ? integral : -integral);
}

double gh_identity_check(const TestKernel& phi, double theta, double beta) {
    const double g_form = 0.5 * (g_func(phi, theta + kPi / 2, theta + beta) - g_func(phi, theta + kPi / 2, theta));
    return std::abs(g_form - h_func(phi, theta, beta));
}

// ------------------------------------------------------------------ I

ScalarField i_field(const AngleField& m, const ScalarField& F, const TestKernel& phi, double tau,
                    const std::optional<Mask>& region) {
    if (!(m.grid == F.grid)) throw PreconditionError("i_field: m and F on different grids");
    const Grid2& g = m.grid;
    const int k = lattice_steps(g, tau);
    const Mask active = effective_mask(m.mask & F.mask, region);
    const Mask valid = active.shifted_intersection(k, 0);
    if (valid.empty()) throw PreconditionError("i_field: no cells with x and x + tau e1 in the region");
    ScalarField out(g, valid, kNaN);
    parallel_rows(g.ny, [&](int j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!valid.at(i, j)) continue;
            const double th = m.at(i, j), th2 = m.at(i + k, j);
            const double f = F.at(i, j), f2 = F.at(i + k, j);
            const double alpha = wrap_angle(th2 - th);
            // I2 uses H(m(x + tau), m(x) / m(x + tau)) with a minus sign, which is
            // the G-form 2F(x+tau)(G(im', m') - G(im', m)).
            const double i1 = f == 0.0 ? 0.0 : 4.0 * f * h_func(phi, th, alpha);
            const double i2 = f2 == 0.0 ? 0.0 : -4.0 * f2 * h_func(phi, th2, -alpha);
            const double i3 = f == 0.0 ? 0.0 : 2.0 * f * g_func(phi, th + kPi / 2, th);
            const double i3s = f2 == 0.0 ? 0.0 : 2.0 * f2 * g_func(phi, th2 + kPi / 2, th2);
            out.at(i, j) = i1 + i2 - (i3s - i3);
        }
    });
    return out;
}

ScalarField i_field(const KineticField& chi, const KineticDensity& sigma, const TestKernel& phi, double tau,
                    const std::optional<Mask>& region) {
    const Grid2& g = chi.grid();
    if (!(sigma.grid() == g)) throw PreconditionError("i_field: chi and sigma on different grids");
    if (sigma.kind() == KineticDensity::Kind::sampled && sigma.sgrid().ns != chi.sgrid().ns) {
        throw PreconditionError("i_field: chi and sigma use different s-grids");
    }
    const int k = lattice_steps(g, tau);
    const Mask active = effective_mask(chi.mask() & sigma.mask(), region);
    const Mask valid = active.shifted_intersection(k, 0);
    if (valid.empty()) throw PreconditionError("i_field: no cells with x and x + tau e1 in the region");
    const SLattice lat(chi.sgrid().ns, phi);
    const std::optional<KineticDensity> sig = sigma;
    ScalarField out(g, valid, kNaN);
    parallel_rows(g.ny, [&](int j) {
        int i0 = g.nx, i1 = -1;
        for (int i = 0; i < g.nx; ++i) {
            if (valid.at(i, j)) {
                i0 = std::min(i0, i);
                i1 = std::max(i1, i + k);
            }
        }
        if (i1 < 0) return;
        std::vector<SLattice::Cell> cells(static_cast<std::size_t>(i1 - i0 + 1));
        fill_row(lat, chi, sig, phi, j, i0, i1, cells);
        for (int i = i0; i <= i1 - k; ++i) {
            if (!valid.at(i, j)) continue;
            out.at(i, j) = lat.i_term(cells[static_cast<std::size_t>(i - i0)], cells[static_cast<std::size_t>(i + k - i0)]);
        }
    });
    return out;
}

// ------------------------------------------------------------------ residual

ResidualReport comp_identity_residual(const KineticField& chi, const std::optional<KineticDensity>& sigma,
                                      const TestKernel& phi, const TestFunction& eta, const TestFunction& rho,
                                      double tau_max) {
    const Grid2& g = chi.grid();
    if (rho.kind != TestFunction::Kind::bump1d) throw PreconditionError("residual: rho must be a 1D bump");
    if (!(rho.lo >= 0.0 && rho.hi <= tau_max)) throw PreconditionError("residual: rho must be supported in (0, tau_max)");
    const int K = static_cast<int>(std::floor(tau_max / g.hx + 1e-9));
    if (K < 1) throw PreconditionError("residual: tau_max below one cell");
    Mask domain = chi.mask();
    if (sigma) {
        if (!(sigma->grid() == g)) throw PreconditionError("residual: chi and sigma on different grids");
        if (sigma->kind() == KineticDensity::Kind::sampled && sigma->sgrid().ns != chi.sgrid().ns) {
            throw PreconditionError("residual: chi and sigma use different s-grids");
        }
        domain = domain & sigma->mask();
    }
    const Mask supp = eta.support(g);
    if (supp.empty()) throw PreconditionError("residual: eta has empty support on the grid");
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (supp.at(i, j) && !domain.at(i + K, j)) {
                throw PreconditionError("residual: supp eta + [0, tau_max] e1 leaves the domain");
            }
            if (supp.at(i, j) && !domain.at(i, j)) throw PreconditionError("residual: supp eta leaves the domain");
        }
    }

    const SLattice lat(chi.sgrid().ns, phi);
    std::vector<double> rho_v(static_cast<std::size_t>(K + 1)), drho_v(static_cast<std::size_t>(K + 1));
    for (int k = 1; k <= K; ++k) {
        rho_v[static_cast<std::size_t>(k)] = rho.value(k * g.hx);
        drho_v[static_cast<std::size_t>(k)] = rho.derivative(k * g.hx);
    }

    std::vector<double> lhs_rows(static_cast<std::size_t>(g.ny), 0.0), rhs_rows(static_cast<std::size_t>(g.ny), 0.0);
    parallel_rows(g.ny, [&](int j) {
        int i0 = g.nx, i1 = -1;
        for (int i = 0; i < g.nx; ++i) {
            if (supp.at(i, j)) {
                i0 = std::min(i0, i);
                i1 = std::max(i1, i + K);
            }
        }
        if (i1 < 0) return;
        std::vector<SLattice::Cell> cells(static_cast<std::size_t>(i1 - i0 + 1));
        fill_row(lat, chi, sigma, phi, j, i0, i1, cells);
        std::vector<double> lhs_cells, rhs_cells;
        std::vector<double> lk(static_cast<std::size_t>(K)), rk(static_cast<std::size_t>(K));
        for (int i = i0; i <= i1 - K; ++i) {
            if (!supp.at(i, j)) continue;
            const Vec2 x = g.center(i, j);
            const double ev = eta.value(x);
            const Vec2 eg = eta.gradient(x);
            const auto& cx = cells[static_cast<std::size_t>(i - i0)];
            for (int k = 1; k <= K; ++k) {
                const auto& cy = cells[static_cast<std::size_t>(i + k - i0)];
                const auto kk = static_cast<std::size_t>(k);
                const double d = lat.delta(cx, cy);
                const Vec2 a = lat.a(cx, cy);
                const double iv = sigma ? lat.i_term(cx, cy) : 0.0;
                lk[kk - 1] = -d * ev * drho_v[kk];
                rk[kk - 1] = (iv * ev - dot(a, eg)) * rho_v[kk];
            }
            lhs_cells.push_back(pairwise_sum(lk));
            rhs_cells.push_back(pairwise_sum(rk));
        }
        lhs_rows[static_cast<std::size_t>(j)] = pairwise_sum(lhs_cells);
        rhs_rows[static_cast<std::size_t>(j)] = pairwise_sum(rhs_cells);
    });
    const double w = g.cell_area() * g.hx;
    ResidualReport r;
    r.lhs = pairwise_sum(lhs_rows) * w;
    r.rhs = pairwise_sum(rhs_rows) * w;
    r.residual = std::abs(r.lhs - r.rhs);
    r.tau_steps = K;
    return r;
}

// ------------------------------------------------------------------ bootstrap

BootstrapReport besov_bootstrap(const AngleField& m, const std::optional<ScalarField>& F, double p,
                                const RegionSpec& regions, const TestFunction& eta, const std::vector<double>& taus) {
    if (!(p > 1.0 && p <= 2.0)) throw PreconditionError("besov_bootstrap: p must lie in (1, 2]");
    const Grid2& g = m.grid;
    if (!(regions.grid == g)) throw PreconditionError("besov_bootstrap: regions on a different grid");
    const double gamma = 3 * p - 3;
    const TestKernel phi = TestKernel::power(gamma);
    const Mask supp = eta.support(g);
    BootstrapReport rep;
    rep.gamma = gamma;
    rep.r0 = std::min(supp.distance_to_complement(regions.omega), regions.prime.distance_to_complement(regions.u));

    const CoercivityReport coer = coercivity_report(phi, 512);
    double link = 0.0;  // sup t^{3p} / omega(t)
    if (!phi.regularized()) {
        link = (gamma + 2) * std::pow(4.0, gamma + 2);
    } else {
        for (int k = 1; k <= 2000; ++k) {
            const double t = 2.0 * k / 2000;
            link = std::max(link, std::pow(t, 3 * p) / omega_phi(phi, t));
        }
    }

    const Mask omega = regions.omega & m.mask;
    const double pprime = p / (p - 1);
    double f_lp = 0.0, f_l1 = 0.0;
    if (F) {
        f_lp = lp_norm(*F, p, omega);
        f_l1 = lp_norm(*F, 1.0, omega);
    }
    const double grad_eta = eta.grad_sup();
    const double layer_grad = lp_norm(grad_norm(m.vectors(), regions.omega.minus(regions.prime)), 1.0);
    const double phi_l1 = phi.l1_norm();
    const double dphi_l1 = phi.derivative_l1_norm();

    std::vector<double> eta2(g.size(), 0.0);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double e = eta.value(g.center(i, j));
            eta2[g.index(i, j)] = e * e;
        }
    }

    std::vector<int> steps;
    for (double requested : taus) steps.push_back(std::max(1, static_cast<int>(std::lround(requested / g.hx))));
    // prefix sup over lattice tau' <= tau of || eta^2 |D^{tau'} m|^gamma ||_{p'}
    std::vector<double> holder_sup(1, 0.0);
    if (F && !steps.empty()) {
        const int kmax = *std::max_element(steps.begin(), steps.end());
        for (int kk = 1; kk <= kmax; ++kk) {
            const Mask v = omega.shifted_intersection(kk, 0);
            const double s = cell_sum(g, v, [&](int i, int j) {
                                 const double d = norm(m.m(i + kk, j) - m.m(i, j));
                                 return std::pow(eta2[g.index(i, j)] * std::pow(d, gamma), pprime);
                             }) *
                             g.cell_area();
            holder_sup.push_back(std::max(holder_sup.back(), std::pow(s, 1.0 / pprime)));
        }
    }

    for (int k : steps) {
        const double tau = k * g.hx;
        if (tau >= rep.r0) {
            std::ostringstream os;
            os << "besov_bootstrap: tau = " << tau << " is not below r0 = " << rep.r0;
            throw PreconditionError(os.str());
        }
        BootstrapRow row;
        row.tau = tau;
        row.coercivity_c = coer.c;
        const Mask valid = omega.shifted_intersection(k, 0);
        const ScalarField delta = delta_field(m, phi, {tau, 0.0}, omega);
        row.lhs = cell_sum(g, valid, [&](int i, int j) { return delta.at(i, j) * eta2[g.index(i, j)]; }) *
                  g.cell_area();
        row.structure = cell_sum(g, valid, [&](int i, int j) {
                            const double d = norm(m.m(i + k, j) - m.m(i, j));
                            return std::pow(d, 3 * p) * eta2[g.index(i, j)];
                        }) *
                        g.cell_area();
        row.C_tau = row.structure / std::pow(tau, p);
        row.link_bound = 2.0 * link / coer.c * row.lhs;
        if (F) {
            row.holder_term = tau * holder_sup[static_cast<std::size_t>(k)] * f_lp;
            row.phi1_term = tau * tau * dphi_l1 * grad_eta * f_l1;
        }
        row.layer_term = tau * tau * phi_l1 * grad_eta * layer_grad;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace eklab
