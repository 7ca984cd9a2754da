#include "eklab/agflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>

namespace eklab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> p(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) p[k] = a[k] * b[k];
    return pairwise_sum(p);
}

double max_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

// Energy of a cell field stored as raw components; optionally the gradient
// with respect to every cell's m.
struct CellEnergy {
    const Grid2& g;
    const Mask& field;  // cells where m is defined
    const Mask& cells;  // energy cells
    double eps;

    bool face(int ia, int ja, int ib, int jb) const {
        return field.at(ia, ja) && field.at(ib, jb) && (cells.at(ia, ja) || cells.at(ib, jb));
    }

    double energy(const std::vector<double>& m1, const std::vector<double>& m2, std::vector<double>* density) const {
        const double area = g.cell_area();
        const double cx = 0.5 * eps / (g.hx * g.hx) * area;
        const double cy = 0.5 * eps / (g.hy * g.hy) * area;
        std::vector<double> rows(static_cast<std::size_t>(g.ny), 0.0);
        if (density) density->assign(g.size(), 0.0);
        parallel_rows(g.ny, [&](int j) {
            std::vector<double> terms;
            terms.reserve(static_cast<std::size_t>(3 * g.nx));
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t k = g.index(i, j);
                if (cells.at(i, j)) {
                    const double q = 1.0 - m1[k] * m1[k] - m2[k] * m2[k];
                    const double e = q * q / (2 * eps) * area;
                    terms.push_back(e);
                    if (density) (*density)[k] += e;
                }
                if (i + 1 < g.nx && face(i, j, i + 1, j)) {
                    const std::size_t b = g.index(i + 1, j);
                    const double d1 = m1[b] - m1[k], d2 = m2[b] - m2[k];
                    const double e = cx * (d1 * d1 + d2 * d2);
                    terms.push_back(e);
                    if (density) {
                        (*density)[k] += 0.5 * e;
                        (*density)[b] += 0.5 * e;
                    }
                }
                if (j + 1 < g.ny && face(i, j, i, j + 1)) {
                    const std::size_t b = g.index(i, j + 1);
                    const double d1 = m1[b] - m1[k], d2 = m2[b] - m2[k];
                    const double e = cy * (d1 * d1 + d2 * d2);
                    terms.push_back(e);
                    if (density) {
                        // rows are processed concurrently; the upper half goes in a second pass
                        (*density)[k] += 0.5 * e;
                    }
                }
            }
            rows[static_cast<std::size_t>(j)] = pairwise_sum(terms);
        });
        if (density) {
            for (int j = 0; j + 1 < g.ny; ++j) {
                for (int i = 0; i < g.nx; ++i) {
                    if (!face(i, j, i, j + 1)) continue;
                    const std::size_t k = g.index(i, j), b = g.index(i, j + 1);
                    const double d1 = m1[b] - m1[k], d2 = m2[b] - m2[k];
                    (*density)[b] += 0.5 * cy * (d1 * d1 + d2 * d2);
                }
            }
        }
        return pairwise_sum(rows);
    }

    // d energy / d m per cell (gather form, each cell writes only itself).
    void gradient(const std::vector<double>& m1, const std::vector<double>& m2, std::vector<double>& g1,
                  std::vector<double>& g2) const {
        const double area = g.cell_area();
        const double wx = eps / (g.hx * g.hx) * area;
        const double wy = eps / (g.hy * g.hy) * area;
        g1.assign(g.size(), 0.0);
        g2.assign(g.size(), 0.0);
        parallel_rows(g.ny, [&](int j) {
            for (int i = 0; i < g.nx; ++i) {
                if (!field.at(i, j)) continue;
                const std::size_t k = g.index(i, j);
                double a1 = 0.0, a2 = 0.0;
                if (cells.at(i, j)) {
                    const double q = 1.0 - m1[k] * m1[k] - m2[k] * m2[k];
                    a1 -= 2.0 * q * m1[k] / eps * area;
                    a2 -= 2.0 * q * m2[k] / eps * area;
                }
                const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
                for (int f = 0; f < 4; ++f) {
                    const int ib = nb[f][0], jb = nb[f][1];
                    if (!face(i, j, ib, jb)) continue;
                    const std::size_t b = g.index(ib, jb);
                    const double w = f < 2 ? wx : wy;
                    a1 += w * (m1[k] - m1[b]);
                    a2 += w * (m2[k] - m2[b]);
                }
                g1[k] = a1;
                g2[k] = a2;
            }
        });
    }
};

void stream_to_cells(const AgDomain& d, const std::vector<double>& u, std::vector<double>& m1, std::vector<double>& m2) {
    const Grid2& g = d.grid;
    m1.assign(g.size(), kNaN);
    m2.assign(g.size(), kNaN);
    parallel_rows(g.ny, [&](int j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!d.layer.at(i, j)) continue;
            // extended precision keeps the dual divergence at the rounding level of m
            const long double u00 = u[d.node(i, j)], u10 = u[d.node(i + 1, j)];
            const long double u01 = u[d.node(i, j + 1)], u11 = u[d.node(i + 1, j + 1)];
            const long double d1 = ((u10 - u00) + (u11 - u01)) / (2.0L * g.hx);
            const long double d2 = ((u01 - u00) + (u11 - u10)) / (2.0L * g.hy);
            const std::size_t k = g.index(i, j);
            m1[k] = static_cast<double>(-d2);
            m2[k] = static_cast<double>(d1);
        }
    });
}

}  // namespace

AgDomain AgDomain::make(const Grid2& g, const Shape& shape, double delta) {
    g.validate();
    if (delta < 3.0 * std::max(g.hx, g.hy) - 1e-12) throw PreconditionError("boundary layer must be at least 3 cells");
    AgDomain d;
    d.grid = g;
    d.shape = shape;
    d.delta = delta;
    d.omega = shape.mask(g);
    d.layer = shape.dilated_mask(g, delta);
    if (d.omega.empty()) throw PreconditionError("domain has no cells");
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (d.layer.at(i, j) && (i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1)) {
                throw PreconditionError("boundary layer reaches the grid edge");
            }
        }
    }
    d.frozen.assign(d.node_count(), 0);
    for (int j = 0; j < d.node_ny(); ++j) {
        for (int i = 0; i < d.node_nx(); ++i) {
            d.frozen[d.node(i, j)] = shape.sdf(d.node_position(i, j)) > 0.0 ? 1 : 0;
        }
    }
    return d;
}

VectorField2 StreamFunction::m() const {
    const Grid2& g = domain->grid;
    VectorField2 out(g, domain->layer);
    stream_to_cells(*domain, u, out.vx, out.vy);
    return out;
}

StreamFunction initial_stream(const AgDomain& d, double noise, std::uint64_t seed) {
    StreamFunction s;
    s.domain = &d;
    s.u.resize(d.node_count());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int j = 0; j < d.node_ny(); ++j) {
        for (int i = 0; i < d.node_nx(); ++i) {
            const std::size_t k = d.node(i, j);
            s.u[k] = d.shape.sdf(d.node_position(i, j));
            const double r = uni(rng);
            if (!d.frozen[k]) s.u[k] += noise * r;
        }
    }
    return s;
}

double ag_energy(const VectorField2& m, double eps, const Mask& cells, ScalarField* density) {
    if (!(eps > 0.0)) throw PreconditionError("ag_energy: eps must be positive");
    const Mask active = cells & m.mask;
    const CellEnergy ce{m.grid, m.mask, active, eps};
    std::vector<double> dens;
    const double e = ce.energy(m.vx, m.vy, density ? &dens : nullptr);
    if (density) {
        *density = ScalarField(m.grid, m.mask, kNaN);
        for (std::size_t k = 0; k < dens.size(); ++k) {
            if (m.mask[k]) density->values[k] = dens[k] / m.grid.cell_area();
        }
    }
    return e;
}

EnergyEval ag_energy(const StreamFunction& s, double eps, bool with_gradient) {
    if (!(eps > 0.0)) throw PreconditionError("ag_energy: eps must be positive");
    const AgDomain& d = *s.domain;
    const Grid2& g = d.grid;
    std::vector<double> m1, m2;
    stream_to_cells(d, s.u, m1, m2);
    const CellEnergy ce{g, d.layer, d.omega, eps};
    EnergyEval ev;
    ev.energy = ce.energy(m1, m2, nullptr);
    if (!std::isfinite(ev.energy)) throw NumericalError("ag_energy: non-finite energy");
    if (!with_gradient) return ev;
    std::vector<double> g1, g2;
    ce.gradient(m1, m2, g1, g2);
    ev.grad.assign(d.node_count(), 0.0);
    const double ax = 1.0 / (2 * g.hx), ay = 1.0 / (2 * g.hy);
    parallel_rows(d.node_ny(), [&](int j) {
        for (int i = 0; i < d.node_nx(); ++i) {
            const std::size_t n = d.node(i, j);
            if (d.frozen[n]) continue;
            double acc = 0.0;
            for (int dj = 0; dj <= 1; ++dj) {
                for (int di = 0; di <= 1; ++di) {
                    // cell whose corner (di, dj) is this node
                    const int ci = i - di, cj = j - dj;
                    if (!g.in_range(ci, cj) || !d.layer.at(ci, cj)) continue;
                    const std::size_t k = g.index(ci, cj);
                    const double dd1 = (di == 1 ? ax : -ax);  // d(d1 u)/du
                    const double dd2 = (dj == 1 ? ay : -ay);  // d(d2 u)/du
                    acc += -g1[k] * dd2 + g2[k] * dd1;
                }
            }
            ev.grad[n] = acc;
        }
    });
    return ev;
}

std::vector<double> stream_divergence(const AgDomain& d, const VectorField2& m) {
    const Grid2& g = d.grid;
    std::vector<double> out(d.node_count(), 0.0);
    for (int j = 1; j < g.ny; ++j) {
        for (int i = 1; i < g.nx; ++i) {
            if (!m.mask.at(i, j) || !m.mask.at(i - 1, j) || !m.mask.at(i, j - 1) || !m.mask.at(i - 1, j - 1)) continue;
            const std::size_t a = g.index(i - 1, j - 1), b = g.index(i, j - 1), c = g.index(i - 1, j),
                              e = g.index(i, j);
            const long double d1 =
                (static_cast<long double>(m.vx[e]) + m.vx[b] - m.vx[c] - m.vx[a]) / (2.0L * g.hx);
            const long double d2 =
                (static_cast<long double>(m.vy[e]) + m.vy[c] - m.vy[b] - m.vy[a]) / (2.0L * g.hy);
            out[d.node(i, j)] = static_cast<double>(d1 + d2);
        }
    }
    return out;
}

GradientCheck gradient_check(const StreamFunction& s, double eps, std::uint64_t seed, int nodes) {
    const AgDomain& d = *s.domain;
    std::vector<std::size_t> free_nodes;
    for (std::size_t k = 0; k < d.node_count(); ++k) {
        if (!d.frozen[k]) free_nodes.push_back(k);
    }
    if (free_nodes.empty()) throw PreconditionError("gradient_check: no free nodes");
    const EnergyEval base = ag_energy(s, eps, true);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    GradientCheck out;

    // directional derivative along a random free-node direction
    std::vector<double> v(d.node_count(), 0.0);
    for (std::size_t k : free_nodes) v[k] = uni(rng);
    const double gv = dot_vec(base.grad, v);
    // the energy is a quartic in u, so the five-point difference is exact up to rounding
    const double step = 0.5 * d.grid.hx;
    auto energy_along = [&](const std::vector<double>& dir, double t) {
        StreamFunction p = s;
        for (std::size_t k = 0; k < p.u.size(); ++k) p.u[k] += t * dir[k];
        return ag_energy(p, eps, false).energy;
    };
    const double fd = (energy_along(v, -2 * step) - 8 * energy_along(v, -step) + 8 * energy_along(v, step) -
                       energy_along(v, 2 * step)) /
                      (12 * step);
    out.directional_rel_error = std::abs(fd - gv) / std::max(std::abs(gv), 1e-300);

    const double scale = max_abs(base.grad);
    std::uniform_int_distribution<std::size_t> pick(0, free_nodes.size() - 1);
    for (int t = 0; t < nodes; ++t) {
        const std::size_t k = free_nodes[pick(rng)];
        std::vector<double> e(d.node_count(), 0.0);
        e[k] = 1.0;
        const double fdk = (energy_along(e, -2 * step) - 8 * energy_along(e, -step) + 8 * energy_along(e, step) -
                            energy_along(e, 2 * step)) /
                           (12 * step);
        const double denom = std::max({std::abs(base.grad[k]), std::abs(fdk), 1e-3 * scale});
        out.node_rel_error = std::max(out.node_rel_error, std::abs(fdk - base.grad[k]) / denom);
    }
    return out;
}

void MinimizeConfig::validate() const {
    if (!(eps_start > 0.0) || !(eps_factor > 0.0 && eps_factor < 1.0) || eps_count < 1) {
        throw PreconditionError("epsilon schedule must be positive and strictly decreasing");
    }
    if (max_iterations < 0 || !(grad_tol > 0.0) || !(armijo > 0.0 && armijo < 1.0) ||
        !(backtrack > 0.0 && backtrack < 1.0) || max_backtracks < 1 || memory < 1 || noise < 0.0) {
        throw PreconditionError("invalid minimizer settings");
    }
}

std::vector<double> MinimizeConfig::schedule() const {
    std::vector<double> out;
    double e = eps_start;
    for (int k = 0; k < eps_count; ++k) {
        out.push_back(e);
        e *= eps_factor;
    }
    return out;
}

MinimizeResult minimize_stream(const StreamFunction& u0, double eps, const MinimizeConfig& cfg) {
    cfg.validate();
    const AgDomain& d = *u0.domain;
    std::vector<std::size_t> free_nodes;
    for (std::size_t k = 0; k < d.node_count(); ++k) {
        if (!d.frozen[k]) free_nodes.push_back(k);
    }
    const std::size_t nf = free_nodes.size();
    const double area = d.grid.cell_area();

    MinimizeResult res;
    res.u = u0;
    auto gather = [&](const std::vector<double>& full) {
        std::vector<double> v(nf);
        for (std::size_t k = 0; k < nf; ++k) v[k] = full[free_nodes[k]];
        return v;
    };

    EnergyEval ev = ag_energy(res.u, eps, true);
    double f = ev.energy;
    std::vector<double> gvec = gather(ev.grad);
    res.trace.push_back(f);

    std::deque<std::vector<double>> S, Y;
    std::deque<double> RHO;
    res.stop_reason = "iteration cap";
    for (int it = 0; it < cfg.max_iterations; ++it) {
        res.grad_norm = max_abs(gvec) / area;
        if (res.grad_norm <= cfg.grad_tol) {
            res.stop_reason = "gradient tolerance";
            break;
        }
        // two-loop recursion
        std::vector<double> q = gvec;
        std::vector<double> alpha(S.size());
        for (std::size_t k = S.size(); k-- > 0;) {
            alpha[k] = RHO[k] * dot_vec(S[k], q);
            for (std::size_t n = 0; n < nf; ++n) q[n] -= alpha[k] * Y[k][n];
        }
        double h0;
        if (!S.empty()) {
            h0 = dot_vec(S.back(), Y.back()) / dot_vec(Y.back(), Y.back());
        } else {
            h0 = 0.1 * d.grid.hx / std::max(max_abs(gvec), 1e-300);
        }
        for (double& v : q) v *= h0;
        for (std::size_t k = 0; k < S.size(); ++k) {
            const double beta = RHO[k] * dot_vec(Y[k], q);
            for (std::size_t n = 0; n < nf; ++n) q[n] += S[k][n] * (alpha[k] - beta);
        }
        std::vector<double> dir(nf);
        for (std::size_t n = 0; n < nf; ++n) dir[n] = -q[n];
        double slope = dot_vec(gvec, dir);
        if (!(slope < 0.0)) {
            S.clear();
            Y.clear();
            RHO.clear();
            const double sc = 0.1 * d.grid.hx / std::max(max_abs(gvec), 1e-300);
            for (std::size_t n = 0; n < nf; ++n) dir[n] = -sc * gvec[n];
            slope = dot_vec(gvec, dir);
        }

        double step = 1.0;
        bool accepted = false;
        StreamFunction trial = res.u;
        double f_new = f;
        for (int b = 0; b < cfg.max_backtracks; ++b) {
            for (std::size_t n = 0; n < nf; ++n) trial.u[free_nodes[n]] = res.u.u[free_nodes[n]] + step * dir[n];
            f_new = ag_energy(trial, eps, false).energy;
            if (f_new <= f + cfg.armijo * step * slope && f_new < f) {
                accepted = true;
                break;
            }
            step *= cfg.backtrack;
        }
        if (!accepted) {
            res.stop_reason = "line search stalled";
            break;
        }
        const EnergyEval ev_new = ag_energy(trial, eps, true);
        std::vector<double> g_new = gather(ev_new.grad);
        std::vector<double> s(nf), y(nf);
        for (std::size_t n = 0; n < nf; ++n) {
            s[n] = step * dir[n];
            y[n] = g_new[n] - gvec[n];
        }
        const double sy = dot_vec(s, y);
        if (sy > 1e-12 * std::sqrt(dot_vec(s, s) * dot_vec(y, y))) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            RHO.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > cfg.memory) {
                S.pop_front();
                Y.pop_front();
                RHO.pop_front();
            }
        }
        res.u = std::move(trial);
        f = ev_new.energy;
        gvec = std::move(g_new);
        res.trace.push_back(f);
        res.iterations = it + 1;
    }
    res.grad_norm = max_abs(gvec) / area;
    return res;
}

EntropyComparison entropy_energy_comparison(const VectorField2& m, double eps, const Entropy& s1, const Entropy& s2,
                                            const Mask& cells) {
    if (!s1.has_extension() || !s2.has_extension()) {
        throw PreconditionError("entropy_energy_comparison: entropies need polynomial extensions");
    }
    EntropyComparison c;
    c.energy = ag_energy(m, eps, cells);
    const ScalarField d1 = entropy_production(m, s1);
    const ScalarField d2 = entropy_production(m, s2);
    const Mask use = cells & d1.mask & d2.mask;
    ScalarField mag(m.grid, use, kNaN);
    for (std::size_t k = 0; k < mag.values.size(); ++k) {
        if (use[k]) mag.values[k] = std::hypot(d1.values[k], d2.values[k]);
    }
    c.total_variation = use.empty() ? 0.0 : integral(mag);
    c.ratio = c.energy > 0.0 ? c.total_variation / c.energy : 0.0;
    return c;
}

std::vector<Rung> continuation_run(const AgDomain& d, const MinimizeConfig& cfg, double kappa) {
    cfg.validate();
    const auto jk = jin_kohn_pair(kappa);
    StreamFunction u = initial_stream(d, cfg.noise, cfg.seed);
    std::vector<Rung> out;
    for (double eps : cfg.schedule()) {
        MinimizeResult r = minimize_stream(u, eps, cfg);
        Rung rung;
        rung.eps = eps;
        rung.u = r.u;
        rung.energy = r.trace.back();
        rung.iterations = r.iterations;
        rung.grad_norm = r.grad_norm;
        rung.stop_reason = r.stop_reason;
        for (std::size_t k = 1; k < r.trace.size(); ++k) {
            if (!(r.trace[k] < r.trace[k - 1])) rung.trace_monotone = false;
        }
        const VectorField2 m = r.u.m();
        rung.comparison = entropy_energy_comparison(m, eps, jk.first, jk.second, d.omega);
        for (double v : stream_divergence(d, m)) rung.max_div = std::max(rung.max_div, std::abs(v));
        out.push_back(std::move(rung));
        u = r.u;
    }
    return out;
}

double vortex_angle_rms(const VectorField2& m, Vec2 center, double r_core, const Mask& cells) {
    const Grid2& g = m.grid;
    std::vector<double> sq;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!cells.at(i, j) || !m.mask.at(i, j)) continue;
            const Vec2 x = g.center(i, j) - center;
            if (norm(x) <= r_core) continue;
            const Vec2 v = m.at(i, j);
            if (norm(v) == 0.0) continue;
            const double e = wrap_angle(std::atan2(v.y, v.x) - (std::atan2(x.y, x.x) + kPi / 2));
            sq.push_back(e * e);
        }
    }
    if (sq.empty()) throw PreconditionError("vortex_angle_rms: no cells outside the core");
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
}

}  // namespace eklab
