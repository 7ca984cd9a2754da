#include "eklab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace eklab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_grid(const Grid2& a, const Grid2& b) { return a == b; }

Mask effective(const Mask& field_mask, const std::optional<Mask>& region) {
    if (!region) return field_mask;
    if (!same_grid(region->grid(), field_mask.grid())) {
        throw PreconditionError("region mask lives on a different grid");
    }
    return field_mask & *region;
}

// Bilinear stencil: up to four (cell, weight) pairs. Returns false when any
// cell with nonzero weight is outside the grid or inactive.
struct Stencil {
    int n = 0;
    std::size_t cell[4]{};
    double w[4]{};
};

bool bilinear_stencil(const Grid2& g, const Mask& active, Vec2 p, Stencil& st) {
    const Vec2 f = g.fractional_index(p);
    constexpr double snap = 1e-9;
    double fi = f.x, fj = f.y;
    if (std::abs(fi - std::round(fi)) < snap) fi = std::round(fi);
    if (std::abs(fj - std::round(fj)) < snap) fj = std::round(fj);
    const int i0 = static_cast<int>(std::floor(fi));
    const int j0 = static_cast<int>(std::floor(fj));
    const double ax = fi - i0;
    const double ay = fj - j0;
    st.n = 0;
    const double wx[2] = {1.0 - ax, ax};
    const double wy[2] = {1.0 - ay, ay};
    for (int b = 0; b < 2; ++b) {
        for (int a = 0; a < 2; ++a) {
            const double w = wx[a] * wy[b];
            if (w == 0.0) continue;
            const int i = i0 + a, j = j0 + b;
            if (!active.at(i, j)) return false;
            st.cell[st.n] = g.index(i, j);
            st.w[st.n] = w;
            ++st.n;
        }
    }
    return st.n > 0;
}

std::vector<double> collect(const std::vector<double>& v, const Mask& m) {
    std::vector<double> out;
    out.reserve(m.count());
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (m[k]) out.push_back(v[k]);
    }
    return out;
}

double lp_of_values(std::vector<double> mags, double p, double area) {
    if (mags.empty()) throw PreconditionError("lp_norm: empty region");
    if (!(p >= 1.0)) throw PreconditionError("lp_norm: exponent must be >= 1");
    if (std::isinf(p)) {
        double mx = 0.0;
        for (double v : mags) mx = std::max(mx, v);
        return mx;
    }
    for (double& v : mags) v = std::pow(v, p) * area;
    return std::pow(pairwise_sum(mags), 1.0 / p);
}

double bump(double rho) {
    if (rho >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - rho * rho));
}

double bump_derivative(double rho) {
    if (std::abs(rho) >= 1.0) return 0.0;
    const double d = 1.0 - rho * rho;
    return bump(rho) * (-2.0 * rho / (d * d));
}

// Distance from (y0, y1) in the first quadrant to the ellipse with semi-axes
// e0 >= e1 (robust bisection on the Lagrange parameter).
double ellipse_distance(double e0, double e1, double y0, double y1) {
    auto get_root = [](double r0, double z0, double z1, double g) {
        const double n0 = r0 * z0;
        double s0 = z1 - 1.0;
        double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
        double s = 0.0;
        for (int it = 0; it < 200; ++it) {
            s = 0.5 * (s0 + s1);
            if (s == s0 || s == s1) break;
            const double r0s = n0 / (s + r0);
            const double r1s = z1 / (s + 1.0);
            const double gs = r0s * r0s + r1s * r1s - 1.0;
            if (gs > 0.0) s0 = s;
            else if (gs < 0.0) s1 = s;
            else break;
        }
        return s;
    };
    if (y1 > 0.0) {
        if (y0 > 0.0) {
            const double z0 = y0 / e0, z1 = y1 / e1;
            const double g = z0 * z0 + z1 * z1 - 1.0;
            if (g == 0.0) return 0.0;
            const double r0 = (e0 / e1) * (e0 / e1);
            const double sbar = get_root(r0, z0, z1, g);
            const double x0 = r0 * y0 / (sbar + r0);
            const double x1 = y1 / (sbar + 1.0);
            return std::hypot(x0 - y0, x1 - y1);
        }
        return std::abs(y1 - e1);
    }
    const double numer0 = e0 * y0;
    const double denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0) {
        const double xde0 = numer0 / denom0;
        const double x0 = e0 * xde0;
        const double x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
        return std::hypot(x0 - y0, x1);
    }
    return std::abs(y0 - e0);
}

}  // namespace

// ---------------------------------------------------------------- Grid2

Grid2 Grid2::square(int n, double lo, double hi) { return box(n, n, lo, hi, lo, hi); }

Grid2 Grid2::box(int nx, int ny, double xlo, double xhi, double ylo, double yhi) {
    Grid2 g{nx, ny, xlo, ylo, (xhi - xlo) / nx, (yhi - ylo) / ny};
    g.validate();
    return g;
}

void Grid2::validate() const {
    if (nx < 4 || ny < 4) {
        std::ostringstream os;
        os << "grid needs nx, ny >= 4 (got " << nx << " x " << ny << ")";
        throw PreconditionError(os.str());
    }
    if (!(hx > 0.0) || !(hy > 0.0) || !std::isfinite(hx) || !std::isfinite(hy)) {
        throw PreconditionError("grid spacings must be positive and finite");
    }
    if (!std::isfinite(x0) || !std::isfinite(y0)) throw PreconditionError("grid origin must be finite");
}

// ---------------------------------------------------------------- Mask

Mask::Mask(const Grid2& g, bool value) : grid_(g), bits_(g.size(), value ? 1 : 0) {}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Mask Mask::operator&(const Mask& o) const {
    if (!(grid_ == o.grid_)) throw PreconditionError("mask grids differ");
    Mask r = *this;
    for (std::size_t k = 0; k < bits_.size(); ++k) r.bits_[k] = bits_[k] & o.bits_[k];
    return r;
}

Mask Mask::operator|(const Mask& o) const {
    if (!(grid_ == o.grid_)) throw PreconditionError("mask grids differ");
    Mask r = *this;
    for (std::size_t k = 0; k < bits_.size(); ++k) r.bits_[k] = bits_[k] | o.bits_[k];
    return r;
}

Mask Mask::minus(const Mask& o) const {
    if (!(grid_ == o.grid_)) throw PreconditionError("mask grids differ");
    Mask r = *this;
    for (std::size_t k = 0; k < bits_.size(); ++k) r.bits_[k] = bits_[k] & (o.bits_[k] ^ 1);
    return r;
}

bool Mask::subset_of(const Mask& o) const {
    if (!(grid_ == o.grid_)) return false;
    for (std::size_t k = 0; k < bits_.size(); ++k) {
        if (bits_[k] && !o.bits_[k]) return false;
    }
    return true;
}

Mask Mask::eroded(int cells) const {
    Mask cur = *this;
    for (int step = 0; step < cells; ++step) {
        Mask next = cur;
        for (int j = 0; j < grid_.ny; ++j) {
            for (int i = 0; i < grid_.nx; ++i) {
                if (!cur.at(i, j)) continue;
                if (!cur.at(i - 1, j) || !cur.at(i + 1, j) || !cur.at(i, j - 1) || !cur.at(i, j + 1)) {
                    next.set(i, j, false);
                }
            }
        }
        cur = std::move(next);
    }
    return cur;
}

Mask Mask::shifted_intersection(int di, int dj) const {
    Mask r(grid_, false);
    for (int j = 0; j < grid_.ny; ++j) {
        for (int i = 0; i < grid_.nx; ++i) {
            if (at(i, j) && at(i + di, j + dj)) r.set(i, j, true);
        }
    }
    return r;
}

double Mask::distance_to_complement(const Mask& outer) const {
    const Grid2& g = grid_;
    std::vector<Vec2> boundary;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (outer.at(i, j)) continue;
            if (outer.at(i - 1, j) || outer.at(i + 1, j) || outer.at(i, j - 1) || outer.at(i, j + 1)) {
                boundary.push_back(g.center(i, j));
            }
        }
    }
    double best = kInf;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!at(i, j)) continue;
            const Vec2 c = g.center(i, j);
            // cells beyond the grid edge count as complement
            best = std::min({best, c.x - (g.x0 - 0.5 * g.hx), (g.x0 + (g.nx + 0.5) * g.hx) - c.x,
                             c.y - (g.y0 - 0.5 * g.hy), (g.y0 + (g.ny + 0.5) * g.hy) - c.y});
            for (const Vec2& b : boundary) best = std::min(best, norm(c - b));
        }
    }
    return best;
}

// ---------------------------------------------------------------- fields

ScalarField::ScalarField(const Grid2& g, const Mask& m, double fill)
    : grid(g), values(g.size(), kNaN), mask(m) {
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (mask[k]) values[k] = fill;
    }
}

VectorField2::VectorField2(const Grid2& g, const Mask& m)
    : grid(g), vx(g.size(), kNaN), vy(g.size(), kNaN), mask(m) {
    for (std::size_t k = 0; k < vx.size(); ++k) {
        if (mask[k]) vx[k] = vy[k] = 0.0;
    }
}

ScalarField VectorField2::magnitude() const {
    ScalarField out(grid, mask);
    for (std::size_t k = 0; k < vx.size(); ++k) {
        if (mask[k]) out.values[k] = std::hypot(vx[k], vy[k]);
    }
    return out;
}

AngleField::AngleField(const Grid2& g, const Mask& m) : grid(g), theta(g.size(), kNaN), mask(m) {
    for (std::size_t k = 0; k < theta.size(); ++k) {
        if (mask[k]) theta[k] = 0.0;
    }
}

VectorField2 AngleField::vectors() const {
    VectorField2 v(grid, mask);
    for (std::size_t k = 0; k < theta.size(); ++k) {
        if (mask[k]) {
            v.vx[k] = std::cos(theta[k]);
            v.vy[k] = std::sin(theta[k]);
        }
    }
    return v;
}

// ---------------------------------------------------------------- shapes

double Shape::sdf(Vec2 p) const {
    const Vec2 d = p - center;
    switch (kind) {
        case Kind::plane:
            return -kInf;
        case Kind::rect: {
            const double qx = std::abs(d.x) - a;
            const double qy = std::abs(d.y) - b;
            const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
            return outside + std::min(std::max(qx, qy), 0.0);
        }
        case Kind::disk:
            return norm(d) - a;
        case Kind::annulus: {
            const double r = norm(d);
            return std::max(a - r, r - b);
        }
        case Kind::ellipse: {
            double y0 = std::abs(d.x), y1 = std::abs(d.y);
            double e0 = a, e1 = b;
            if (e0 < e1) {
                std::swap(e0, e1);
                std::swap(y0, y1);
            }
            const double dist = ellipse_distance(e0, e1, y0, y1);
            const double inside = (y0 / e0) * (y0 / e0) + (y1 / e1) * (y1 / e1) < 1.0;
            return inside ? -dist : dist;
        }
    }
    return kInf;
}

Mask Shape::mask(const Grid2& g) const { return dilated_mask(g, 0.0); }

Mask Shape::dilated_mask(const Grid2& g, double delta) const {
    Mask m(g, false);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (sdf(g.center(i, j)) < delta) m.set(i, j, true);
        }
    }
    return m;
}

RegionSpec RegionSpec::make(const Grid2& g, const Shape& omega, const Shape& u, const Shape& prime,
                            double delta) {
    if (delta < 0.0) throw PreconditionError("layer width must be nonnegative");
    RegionSpec r;
    r.grid = g;
    r.omega_shape = omega;
    r.u_shape = u;
    r.prime_shape = prime;
    r.delta = delta;
    r.omega = omega.mask(g);
    r.u = u.mask(g);
    r.prime = prime.mask(g);
    r.layer = delta > 0.0 ? omega.dilated_mask(g, delta) : r.omega;
    r.validate();
    return r;
}

void RegionSpec::validate() const {
    grid.validate();
    if (!prime.subset_of(u) || !u.subset_of(omega)) {
        throw PreconditionError("regions must be nested: prime within U within Omega");
    }
    if (!prime.empty() && prime.distance_to_complement(u) <= 0.0) {
        throw PreconditionError("prime must be compactly inside U");
    }
    if (!u.empty() && u.distance_to_complement(omega) <= 0.0) {
        throw PreconditionError("U must be compactly inside Omega");
    }
    if (!omega.subset_of(layer)) throw PreconditionError("layer must contain Omega");
}

// ---------------------------------------------------------------- test functions

double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double f0 = std::exp(-1.0 / u);
    const double f1 = std::exp(-1.0 / (1.0 - u));
    return f0 / (f0 + f1);
}

double smooth_step_derivative(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double f0 = std::exp(-1.0 / u);
    const double f1 = std::exp(-1.0 / (1.0 - u));
    const double d0 = f0 / (u * u);
    const double d1 = -f1 / ((1.0 - u) * (1.0 - u));
    const double s = f0 + f1;
    return (d0 * s - f0 * (d0 + d1)) / (s * s);
}

TestFunction TestFunction::radial(Vec2 c, double plateau, double support) {
    if (!(plateau >= 0.0) || !(support > plateau)) {
        throw PreconditionError("radial test function needs 0 <= plateau < support");
    }
    TestFunction t;
    t.kind = Kind::radial;
    t.center = c;
    t.inner = plateau;
    t.outer = support;
    return t;
}

TestFunction TestFunction::tensor(Vec2 c, double plateau_x, double support_x, double plateau_y,
                                  double support_y) {
    if (!(support_x > plateau_x) || !(support_y > plateau_y) || plateau_x < 0.0 || plateau_y < 0.0) {
        throw PreconditionError("tensor test function needs plateau < support on both axes");
    }
    TestFunction t;
    t.kind = Kind::tensor;
    t.center = c;
    t.inner = plateau_x;
    t.outer = support_x;
    t.inner_y = plateau_y;
    t.outer_y = support_y;
    return t;
}

TestFunction TestFunction::bump1d(double lo, double hi) {
    if (!(hi > lo)) throw PreconditionError("bump1d needs lo < hi");
    TestFunction t;
    t.kind = Kind::bump1d;
    t.lo = lo;
    t.hi = hi;
    return t;
}

namespace {
// plateau profile in a squared variable: 1 for q <= in^2, 0 for q >= out^2
double plateau_profile(double q, double in, double out) {
    return smooth_step((out * out - q) / (out * out - in * in));
}
double plateau_profile_dq(double q, double in, double out) {
    const double den = out * out - in * in;
    return -smooth_step_derivative((out * out - q) / den) / den;
}
}  // namespace

double TestFunction::value(Vec2 p) const {
    const Vec2 d = p - center;
    switch (kind) {
        case Kind::radial:
            return plateau_profile(dot(d, d), inner, outer);
        case Kind::tensor:
            return plateau_profile(d.x * d.x, inner, outer) * plateau_profile(d.y * d.y, inner_y, outer_y);
        case Kind::bump1d:
            throw PreconditionError("bump1d is a function of one variable");
    }
    return 0.0;
}

Vec2 TestFunction::gradient(Vec2 p) const {
    const Vec2 d = p - center;
    switch (kind) {
        case Kind::radial: {
            const double g = plateau_profile_dq(dot(d, d), inner, outer);
            return {2.0 * d.x * g, 2.0 * d.y * g};
        }
        case Kind::tensor: {
            const double fx = plateau_profile(d.x * d.x, inner, outer);
            const double fy = plateau_profile(d.y * d.y, inner_y, outer_y);
            const double gx = plateau_profile_dq(d.x * d.x, inner, outer) * 2.0 * d.x;
            const double gy = plateau_profile_dq(d.y * d.y, inner_y, outer_y) * 2.0 * d.y;
            return {gx * fy, fx * gy};
        }
        case Kind::bump1d:
            throw PreconditionError("bump1d is a function of one variable");
    }
    return {};
}

double TestFunction::value(double t) const {
    if (kind != Kind::bump1d) throw PreconditionError("not a 1D test function");
    const double v = (2.0 * t - lo - hi) / (hi - lo);
    return bump(v);
}

double TestFunction::derivative(double t) const {
    if (kind != Kind::bump1d) throw PreconditionError("not a 1D test function");
    const double v = (2.0 * t - lo - hi) / (hi - lo);
    return bump_derivative(v) * 2.0 / (hi - lo);
}

Mask TestFunction::support(const Grid2& g) const {
    Mask m(g, false);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (value(g.center(i, j)) > 0.0) m.set(i, j, true);
        }
    }
    return m;
}

double TestFunction::grad_sup() const {
    constexpr int kSamples = 4000;
    double best = 0.0;
    switch (kind) {
        case Kind::radial:
            for (int k = 0; k <= kSamples; ++k) {
                const double r = inner + (outer - inner) * k / kSamples;
                best = std::max(best, std::abs(2.0 * r * plateau_profile_dq(r * r, inner, outer)));
            }
            return best;
        case Kind::tensor: {
            double gx = 0.0, gy = 0.0;
            for (int k = 0; k <= kSamples; ++k) {
                const double x = inner + (outer - inner) * k / kSamples;
                const double y = inner_y + (outer_y - inner_y) * k / kSamples;
                gx = std::max(gx, std::abs(2.0 * x * plateau_profile_dq(x * x, inner, outer)));
                gy = std::max(gy, std::abs(2.0 * y * plateau_profile_dq(y * y, inner_y, outer_y)));
            }
            return std::hypot(gx, gy);
        }
        case Kind::bump1d:
            for (int k = 0; k <= kSamples; ++k) {
                best = std::max(best, std::abs(derivative(lo + (hi - lo) * k / kSamples)));
            }
            return best;
    }
    return best;
}

// ---------------------------------------------------------------- canonical fields

AngleField make_canonical_field(const CanonicalSpec& spec, const Grid2& grid, const Mask& mask) {
    grid.validate();
    if (!(mask.grid() == grid)) throw PreconditionError("mask grid mismatch");
    AngleField f(grid, mask);
    using K = CanonicalSpec::Kind;
    if ((spec.kind == K::wall || spec.kind == K::mollified_wall) &&
        !(spec.alpha >= 0.0 && spec.alpha <= kPi / 2)) {
        throw PreconditionError("wall angle alpha must lie in [0, pi/2]");
    }
    if (spec.kind == K::mollified_wall && !(spec.width > 0.0)) {
        throw PreconditionError("mollified wall needs a positive width");
    }
    if (spec.kind == K::vortex) {
        const double xmax = grid.x0 + grid.width(), ymax = grid.y0 + grid.height();
        if (spec.center.x <= grid.x0 || spec.center.x >= xmax || spec.center.y <= grid.y0 ||
            spec.center.y >= ymax) {
            throw PreconditionError("vortex center must lie inside the grid");
        }
    }
    const double tiny = 1e-9 * std::min(grid.hx, grid.hy);
    const bool horizontal = spec.axis == CanonicalSpec::Axis::horizontal;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            if (!mask.at(i, j)) continue;
            const Vec2 x = grid.center(i, j);
            double th = 0.0;
            switch (spec.kind) {
                case K::constant:
                    th = spec.theta0;
                    break;
                case K::vortex: {
                    const Vec2 d = x - spec.center;
                    if (norm(d) < tiny) {
                        throw PreconditionError("vortex center coincides with a cell center");
                    }
                    th = std::atan2(d.y, d.x) + kPi / 2;
                    break;
                }
                case K::wall: {
                    const double coord = horizontal ? x.y : x.x;
                    const double side = coord > spec.position ? 1.0 : -1.0;
                    th = side * spec.alpha;
                    if (horizontal) th += kPi / 2;
                    break;
                }
                case K::mollified_wall: {
                    const double coord = horizontal ? x.y : x.x;
                    const double m2 = std::sin(spec.alpha) * std::tanh((coord - spec.position) / spec.width);
                    const double m1 = std::sqrt(std::max(0.0, 1.0 - m2 * m2));
                    th = std::atan2(m2, m1);
                    if (horizontal) th += kPi / 2;
                    break;
                }
                case K::synthetic_smooth:
                    th = 0.5 * std::sin(1.3 * x.x + 0.4) + 0.4 * std::cos(0.9 * x.y - 0.3) + 0.2;
                    break;
            }
            f.theta[grid.index(i, j)] = wrap_angle(th);
        }
    }
    f.smooth = spec.kind != K::wall;
    return f;
}

Mask excise_disk(const Mask& m, Vec2 center, double r_core) {
    Mask out = m;
    const Grid2& g = m.grid();
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (norm(g.center(i, j) - center) < r_core) out.set(i, j, false);
        }
    }
    return out;
}

// ---------------------------------------------------------------- sampling

std::optional<Vec2> sample_unit(const AngleField& m, Vec2 p) {
    Stencil st;
    if (!bilinear_stencil(m.grid, m.mask, p, st)) return std::nullopt;
    Vec2 v{};
    for (int k = 0; k < st.n; ++k) v += st.w[k] * m.m(st.cell[k]);
    const double n = norm(v);
    if (n < 1e-300) return std::nullopt;
    return Vec2{v.x / n, v.y / n};
}

std::optional<double> sample_scalar(const ScalarField& f, Vec2 p) {
    Stencil st;
    if (!bilinear_stencil(f.grid, f.mask, p, st)) return std::nullopt;
    double v = 0.0;
    for (int k = 0; k < st.n; ++k) v += st.w[k] * f.values[st.cell[k]];
    return v;
}

bool on_lattice(const Grid2& g, Vec2 h, int* di, int* dj) {
    const double fi = h.x / g.hx, fj = h.y / g.hy;
    const double ri = std::round(fi), rj = std::round(fj);
    const bool ok = std::abs(fi - ri) < 1e-9 && std::abs(fj - rj) < 1e-9;
    if (ok) {
        if (di) *di = static_cast<int>(ri);
        if (dj) *dj = static_cast<int>(rj);
    }
    return ok;
}

// ---------------------------------------------------------------- differences

ScalarField finite_difference(const ScalarField& f, Vec2 h, DiffMode mode, const std::optional<Mask>& region) {
    const Mask active = effective(f.mask, region);
    const Grid2& g = f.grid;
    Mask out_mask(g, false);
    std::vector<double> vals(g.size(), kNaN);
    int di = 0, dj = 0;
    const bool lattice = on_lattice(g, h, &di, &dj);
    ScalarField restricted = f;
    restricted.mask = active;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!active.at(i, j)) continue;
            double shifted = 0.0;
            if (lattice) {
                if (!active.at(i + di, j + dj)) continue;
                shifted = f.at(i + di, j + dj);
            } else {
                const auto s = sample_scalar(restricted, g.center(i, j) + h);
                if (!s) continue;
                shifted = *s;
            }
            const auto k = g.index(i, j);
            vals[k] = mode == DiffMode::D ? shifted - f.values[k] : shifted;
            out_mask.set(k, true);
        }
    }
    if (out_mask.empty()) throw PreconditionError("finite_difference: shrunk region is empty");
    ScalarField out;
    out.grid = g;
    out.values = std::move(vals);
    out.mask = std::move(out_mask);
    return out;
}

VectorField2 finite_difference(const AngleField& m, Vec2 h, DiffMode mode, const std::optional<Mask>& region) {
    const Mask active = effective(m.mask, region);
    const Grid2& g = m.grid;
    Mask out_mask(g, false);
    VectorField2 out(g, out_mask);
    int di = 0, dj = 0;
    const bool lattice = on_lattice(g, h, &di, &dj);
    AngleField restricted = m;
    restricted.mask = active;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!active.at(i, j)) continue;
            Vec2 shifted{};
            if (lattice) {
                if (!active.at(i + di, j + dj)) continue;
                shifted = m.m(i + di, j + dj);
            } else {
                const auto s = sample_unit(restricted, g.center(i, j) + h);
                if (!s) continue;
                shifted = *s;
            }
            out.put(i, j, mode == DiffMode::D ? shifted - m.m(i, j) : shifted);
            out_mask.set(g.index(i, j), true);
        }
    }
    if (out_mask.empty()) throw PreconditionError("finite_difference: shrunk region is empty");
    out.mask = std::move(out_mask);
    return out;
}

// ---------------------------------------------------------------- norms

double lp_norm(const ScalarField& f, double p, const std::optional<Mask>& region) {
    const Mask active = effective(f.mask, region);
    auto vals = collect(f.values, active);
    for (double& v : vals) v = std::abs(v);
    return lp_of_values(std::move(vals), p, f.grid.cell_area());
}

double lp_norm(const VectorField2& f, double p, const std::optional<Mask>& region) {
    return lp_norm(f.magnitude(), p, region);
}

double integral(const ScalarField& f, const std::optional<Mask>& region) {
    const Mask active = effective(f.mask, region);
    auto vals = collect(f.values, active);
    for (double& v : vals) v *= f.grid.cell_area();
    return pairwise_sum(vals);
}

namespace {

template <class Fn>
ScalarField central_stencil(const VectorField2& v, const std::optional<Mask>& region, Fn&& fn) {
    const Mask active = effective(v.mask, region);
    const Grid2& g = v.grid;
    Mask out_mask(g, false);
    std::vector<double> vals(g.size(), kNaN);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!active.at(i, j)) continue;
            if (!v.mask.at(i - 1, j) || !v.mask.at(i + 1, j) || !v.mask.at(i, j - 1) || !v.mask.at(i, j + 1)) {
                continue;
            }
            const Vec2 dx = (v.at(i + 1, j) - v.at(i - 1, j)) * (0.5 / g.hx);
            const Vec2 dy = (v.at(i, j + 1) - v.at(i, j - 1)) * (0.5 / g.hy);
            const auto k = g.index(i, j);
            vals[k] = fn(dx, dy);
            out_mask.set(k, true);
        }
    }
    if (out_mask.empty()) throw PreconditionError("region too small for a central stencil");
    ScalarField out;
    out.grid = g;
    out.values = std::move(vals);
    out.mask = std::move(out_mask);
    return out;
}

}  // namespace

ScalarField divergence(const VectorField2& v, const std::optional<Mask>& region) {
    return central_stencil(v, region, [](Vec2 dx, Vec2 dy) { return dx.x + dy.y; });
}

ScalarField curl(const VectorField2& v, const std::optional<Mask>& region) {
    return central_stencil(v, region, [](Vec2 dx, Vec2 dy) { return dx.y - dy.x; });
}

ScalarField grad_norm(const VectorField2& v, const std::optional<Mask>& region) {
    return central_stencil(v, region, [](Vec2 dx, Vec2 dy) { return std::sqrt(dot(dx, dx) + dot(dy, dy)); });
}

ScalarField grad_norm_sq(const AngleField& m, const std::optional<Mask>& region) {
    return central_stencil(m.vectors(), region, [](Vec2 dx, Vec2 dy) { return dot(dx, dx) + dot(dy, dy); });
}

// ---------------------------------------------------------------- mollification

namespace {

struct Offset {
    int di, dj;
    double w;
};

std::vector<Offset> bump_kernel(const Grid2& g, double width) {
    if (width < 2.0 * std::max(g.hx, g.hy) - 1e-12) {
        throw PreconditionError("mollify: width must be at least two cells");
    }
    if (width > std::min(g.width(), g.height())) {
        throw PreconditionError("mollify: width exceeds the domain size");
    }
    const int ri = static_cast<int>(std::ceil(width / g.hx));
    const int rj = static_cast<int>(std::ceil(width / g.hy));
    std::vector<Offset> k;
    for (int dj = -rj; dj <= rj; ++dj) {
        for (int di = -ri; di <= ri; ++di) {
            const double r = std::hypot(di * g.hx, dj * g.hy) / width;
            const double w = bump(r);
            if (w > 0.0) k.push_back({di, dj, w});
        }
    }
    return k;
}

std::vector<double> convolve(const Grid2& g, const Mask& mask, const std::vector<double>& vals,
                             const std::vector<Offset>& kernel) {
    std::vector<double> out(g.size(), kNaN);
    parallel_rows(g.ny, [&](int j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!mask.at(i, j)) continue;
            double s = 0.0, ws = 0.0;
            for (const Offset& o : kernel) {
                if (!mask.at(i + o.di, j + o.dj)) continue;
                s += o.w * vals[g.index(i + o.di, j + o.dj)];
                ws += o.w;
            }
            out[g.index(i, j)] = s / ws;
        }
    });
    return out;
}

}  // namespace

ScalarField mollify(const ScalarField& f, double width) {
    const auto kernel = bump_kernel(f.grid, width);
    ScalarField out = f;
    out.values = convolve(f.grid, f.mask, f.values, kernel);
    return out;
}

VectorField2 mollify(const VectorField2& f, double width) {
    const auto kernel = bump_kernel(f.grid, width);
    VectorField2 out = f;
    out.vx = convolve(f.grid, f.mask, f.vx, kernel);
    out.vy = convolve(f.grid, f.mask, f.vy, kernel);
    return out;
}

AngleField mollify(const AngleField& m, double width) {
    const VectorField2 v = mollify(m.vectors(), width);
    AngleField out = m;
    for (std::size_t k = 0; k < out.theta.size(); ++k) {
        if (!m.mask[k]) continue;
        if (std::hypot(v.vx[k], v.vy[k]) < 1e-12) {
            throw NumericalError("mollify: averaged direction vanishes; angle undefined");
        }
        out.theta[k] = std::atan2(v.vy[k], v.vx[k]);
    }
    out.smooth = true;
    return out;
}

AngleField rescale_field(const AngleField& m, double r, const Grid2& target, const Mask& target_mask) {
    if (!(r > 0.0)) throw PreconditionError("rescale_field: scale must be positive");
    AngleField out(target, target_mask);
    out.smooth = m.smooth;
    for (int j = 0; j < target.ny; ++j) {
        for (int i = 0; i < target.nx; ++i) {
            if (!target_mask.at(i, j)) continue;
            const auto s = sample_unit(m, r * target.center(i, j));
            if (!s) throw PreconditionError("rescale_field: sample point outside the source domain");
            out.theta[target.index(i, j)] = std::atan2(s->y, s->x);
        }
    }
    return out;
}

}  // namespace eklab
