#include "eklab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "eklab/quadrature.hpp"

namespace eklab {

namespace {

constexpr double kMomentTol = 1e-10;

void require_moment_free(const TorusFunction& psi) {
    const Vec2 mom = psi.first_moment();
    if (norm(mom) > kMomentTol * std::max(1.0, psi.sup_norm())) {
        std::ostringstream os;
        os.precision(3);
        os << "generator violates the moment condition: int psi e^{is} ds = (" << mom.x << ", " << mom.y << ")";
        throw PreconditionError(os.str());
    }
}

Vec2 half_circle_integral(const TorusFunction& psi, double theta) {
    quad::Options opt;
    opt.points = 20;
    opt.max_panel = kPi / 32;
    const double a = theta - kPi / 2, b = theta + kPi / 2;
    const double x = quad::integrate([&](double s) { return psi(s) * std::cos(s); }, a, b, {}, opt);
    const double y = quad::integrate([&](double s) { return psi(s) * std::sin(s); }, a, b, {}, opt);
    return {x, y};
}

Vec2 five_point(const std::function<Vec2(double)>& f, double x, double h) {
    return (f(x - 2 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2 * h)) * (1.0 / (12.0 * h));
}

// Periodic cubic Hermite table of Phi(e^{i theta}).
struct HermiteTable {
    int n = 0;
    std::vector<Vec2> value;
    std::vector<Vec2> slope;

    Vec2 operator()(double theta) const {
        const double step = kTwoPi / n;
        double u = theta / step;
        const double fl = std::floor(u);
        u -= fl;
        long k = static_cast<long>(fl) % n;
        if (k < 0) k += n;
        const auto k0 = static_cast<std::size_t>(k);
        const auto k1 = static_cast<std::size_t>((k + 1) % n);
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
        const double h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u);
        const double h11 = u * u * (u - 1);
        return h00 * value[k0] + (h10 * step) * slope[k0] + h01 * value[k1] + (h11 * step) * slope[k1];
    }
};

}  // namespace

Vec2 Entropy::flux(Vec2 m) const {
    if (extension) return extension(m);
    return circle(std::atan2(m.y, m.x));
}

Vec2 phi_from_psi_angle(const TorusFunction& psi, double theta, double kappa) {
    require_moment_free(psi);
    return kappa * half_circle_integral(psi, theta);
}

Vec2 phi_from_psi(const TorusFunction& psi, Vec2 w, double kappa) {
    if (norm(w) == 0.0) throw PreconditionError("phi_from_psi: w must be nonzero");
    return phi_from_psi_angle(psi, std::atan2(w.y, w.x), kappa);
}

double psi_from_phi(const std::function<Vec2(double)>& phi_on_circle, double s, int n) {
    const double h = kPi / n;
    // Phi(i e^{is}) = Phi(e^{i(s + pi/2)})
    const Vec2 d = five_point([&](double t) { return phi_on_circle(t + kPi / 2); }, s, h);
    return -0.5 * dot(unit(s), d);
}

TorusFunction psi_table_from_phi(const std::function<Vec2(double)>& phi_on_circle, int samples, int stencil_n) {
    std::vector<double> v(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) {
        v[static_cast<std::size_t>(k)] = psi_from_phi(phi_on_circle, kTwoPi * k / samples, stencil_n);
    }
    try {
        return TorusFunction::from_samples(std::move(v), {.odd = false, .pi_periodic = true});
    } catch (const PreconditionError&) {
        throw PreconditionError("psi_from_phi: result is not pi-periodic, so Phi is not odd");
    }
}

Entropy identity_entropy(double kappa) {
    Entropy e;
    e.name = "id";
    e.kappa = kappa;
    e.generator = TorusFunction::from_closed_form([](double) { return 0.5; }, 256, {.pi_periodic = true});
    e.circle = [kappa](double th) { return kappa * unit(th); };
    e.circle_derivative = [kappa](double th) { return kappa * perp(unit(th)); };
    e.extension = [kappa](Vec2 m) { return kappa * m; };
    return e;
}

std::pair<Entropy, Entropy> jin_kohn_pair(double kappa, JinKohnConvention convention) {
    if (!(kappa > 0.0)) throw PreconditionError("jin_kohn_pair: kappa must be positive");
    Entropy s1, s2;
    s1.kappa = s2.kappa = kappa;
    if (convention == JinKohnConvention::ent_fixed) {
        s1.name = "jk1";
        s2.name = "jk2";
        s1.generator = TorusFunction::from_closed_form([](double s) { return std::cos(2 * s); }, 256,
                                                      {.pi_periodic = true});
        s2.generator = TorusFunction::from_closed_form([](double s) { return std::sin(2 * s); }, 256,
                                                      {.odd = true, .pi_periodic = true});
        // e^{-i th} - 1/3 e^{3 i th}
        s1.circle = [kappa](double th) {
            return kappa * Vec2{std::cos(th) - std::cos(3 * th) / 3, -std::sin(th) - std::sin(3 * th) / 3};
        };
        s1.circle_derivative = [kappa](double th) {
            return kappa * Vec2{-std::sin(th) + std::sin(3 * th), -std::cos(th) - std::cos(3 * th)};
        };
        s1.extension = [kappa](Vec2 m) {
            return kappa * Vec2{2 * m.x - 4.0 / 3.0 * m.x * m.x * m.x, -2 * m.y + 4.0 / 3.0 * m.y * m.y * m.y};
        };
        // i e^{-i th} + i/3 e^{3 i th}
        s2.circle = [kappa](double th) {
            return kappa * Vec2{std::sin(th) - std::sin(3 * th) / 3, std::cos(th) + std::cos(3 * th) / 3};
        };
        s2.circle_derivative = [kappa](double th) {
            return kappa * Vec2{std::cos(th) - std::cos(3 * th), -std::sin(th) - std::sin(3 * th)};
        };
        s2.extension = [kappa](Vec2 m) {
            return kappa * Vec2{4.0 / 3.0 * m.y * m.y * m.y, 4.0 / 3.0 * m.x * m.x * m.x};
        };
    } else {
        s1.name = "jk1-literal";
        s2.name = "jk2-literal";
        // rows of e^{i th} z + 1/3 e^{3 i th} conj(z), as printed
        s1.circle = [kappa](double th) {
            return kappa * Vec2{std::cos(th) + std::cos(3 * th) / 3, -std::sin(th) + std::sin(3 * th) / 3};
        };
        s1.circle_derivative = [kappa](double th) {
            return kappa * Vec2{-std::sin(th) - std::sin(3 * th), -std::cos(th) + std::cos(3 * th)};
        };
        s2.circle = [kappa](double th) {
            return kappa * Vec2{std::sin(th) + std::sin(3 * th) / 3, std::cos(th) - std::cos(3 * th) / 3};
        };
        s2.circle_derivative = [kappa](double th) {
            return kappa * Vec2{std::cos(th) + std::cos(3 * th), -std::sin(th) + std::sin(3 * th)};
        };
    }
    return {std::move(s1), std::move(s2)};
}

Entropy entropy_from_psi(const TorusFunction& psi, double kappa, std::string name) {
    require_moment_free(psi);
    constexpr int kTable = 2048;
    auto table = std::make_shared<HermiteTable>();
    table->n = kTable;
    table->value.resize(kTable);
    table->slope.resize(kTable);
    for (int k = 0; k < kTable; ++k) {
        const double th = kTwoPi * k / kTable;
        table->value[static_cast<std::size_t>(k)] = kappa * half_circle_integral(psi, th);
        // d/dtheta Phi^psi = (psi(th + pi/2) + psi(th - pi/2)) i e^{i th}
        const double lam = kappa * (psi(th + kPi / 2) + psi(th - kPi / 2));
        table->slope[static_cast<std::size_t>(k)] = lam * perp(unit(th));
    }
    Entropy e;
    e.name = std::move(name);
    e.kappa = kappa;
    e.generator = psi;
    e.circle = [table](double th) { return (*table)(th); };
    e.circle_derivative = [psi, kappa](double th) {
        return kappa * (psi(th + kPi / 2) + psi(th - kPi / 2)) * perp(unit(th));
    };
    return e;
}

TorusFunction read_psi_table(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open psi table " + path.string());
    std::vector<double> s, v;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        double a = 0, b = 0;
        if (!(ls >> a >> b)) throw ParseError("psi table: malformed line '" + line + "'");
        s.push_back(a);
        v.push_back(b);
    }
    const std::size_t n = s.size();
    if (n < 2) throw ParseError("psi table: too few rows");
    const double step = kTwoPi / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(s[k] - step * static_cast<double>(k)) > 1e-9) {
            throw ParseError("psi table: s column must be the uniform grid 2 pi k / N");
        }
    }
    return TorusFunction::from_samples(std::move(v));
}

Entropy entropy_by_name(const std::string& name, double kappa) {
    if (name == "id") return identity_entropy(kappa);
    if (name == "jk1" || name == "jk2") {
        auto pr = jin_kohn_pair(kappa, JinKohnConvention::ent_fixed);
        return name == "jk1" ? pr.first : pr.second;
    }
    if (name == "jk1-literal" || name == "jk2-literal") {
        auto pr = jin_kohn_pair(kappa, JinKohnConvention::literal);
        return name == "jk1-literal" ? pr.first : pr.second;
    }
    if (name.rfind("psi:", 0) == 0) return entropy_from_psi(read_psi_table(name.substr(4)), kappa, name);
    throw PreconditionError("unknown entropy '" + name + "'");
}

TangencyReport ent_tangency_defect(const Entropy& phi, int n) {
    TangencyReport r;
    r.lambda.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double th = kTwoPi * k / n;
        const Vec2 d = phi.circle_derivative ? phi.circle_derivative(th) : five_point(phi.circle, th, 1e-3);
        const double normal = std::abs(dot(unit(th), d));
        if (normal > r.defect) {
            r.defect = normal;
            r.defect_theta = th;
        }
        r.lambda[static_cast<std::size_t>(k)] = dot(perp(unit(th)), d);
    }
    return r;
}

namespace {

ScalarField production_from_flux(const Grid2& g, const Mask& active, const std::function<Vec2(std::size_t)>& flux_at) {
    VectorField2 flux(g, active);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!active[k]) continue;
        const Vec2 f = flux_at(k);
        flux.vx[k] = f.x;
        flux.vy[k] = f.y;
    }
    return divergence(flux);
}

}  // namespace

ScalarField entropy_production(const AngleField& m, const Entropy& phi, const std::optional<Mask>& region) {
    const Mask active = region ? (m.mask & *region) : m.mask;
    return production_from_flux(m.grid, active, [&](std::size_t k) { return phi.circle(m.theta[k]); });
}

ScalarField entropy_production(const VectorField2& m, const Entropy& phi, const std::optional<Mask>& region) {
    if (!phi.has_extension()) {
        throw PreconditionError("entropy_production: '" + phi.name + "' has no polynomial extension");
    }
    const Mask active = region ? (m.mask & *region) : m.mask;
    return production_from_flux(m.grid, active, [&](std::size_t k) { return phi.extension({m.vx[k], m.vy[k]}); });
}

double jump_flux(Vec2 m_minus, Vec2 m_plus, Vec2 nu, const Entropy& phi) {
    if (std::abs(dot(m_plus - m_minus, nu)) > 1e-12) {
        throw PreconditionError("jump_flux: normal component jumps, the jump is not divergence-free");
    }
    const Vec2 fp = phi.circle(std::atan2(m_plus.y, m_plus.x));
    const Vec2 fm = phi.circle(std::atan2(m_minus.y, m_minus.x));
    return dot(fp - fm, nu);
}

ScalingCheck scaling_check(const AngleField& m, const Entropy& phi, double r, double p, const Grid2& target) {
    if (!(r > 0.0) || !(p >= 1.0)) throw PreconditionError("scaling_check: need r > 0 and p >= 1");
    const Grid2& g = m.grid;
    if (g.x0 > -r || g.y0 > -r || g.x0 + g.width() < r || g.y0 + g.height() < r) {
        throw PreconditionError("scaling_check: B_r is not inside the field's domain");
    }
    const Mask ball_r = Shape::disk({0, 0}, r).mask(g);
    const Mask ball_1 = Shape::disk({0, 0}, 1.0).mask(target);
    const AngleField mr = rescale_field(m, r, target, Mask(target, true));
    ScalingCheck out;
    out.prefactor = std::pow(r, 1.0 - 2.0 / p);
    out.lhs = lp_norm(entropy_production(mr, phi, ball_1), p);
    out.rhs = out.prefactor * lp_norm(entropy_production(m, phi, ball_r), p);
    return out;
}

}  // namespace eklab
