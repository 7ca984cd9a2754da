#include "eklab/besov.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace eklab {

std::vector<double> dyadic_ladder(double L, int kmin, int kmax) {
    if (!(L > 0.0) || kmin > kmax) throw PreconditionError("dyadic_ladder: need L > 0 and kmin <= kmax");
    std::vector<double> out;
    for (int k = kmin; k <= kmax; ++k) out.push_back(std::ldexp(L, -k));
    return out;
}

namespace {

struct Fit {
    double slope = 0.0;
    double rms = 0.0;
};

Fit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    Fit f;
    f.slope = sxy / sxx;
    double ss = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = y[k] - (my + f.slope * (x[k] - mx));
        ss += r * r;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

}  // namespace

StructureReport structure_exponent(const AngleField& m, double q, const Mask& U, const std::vector<double>& ladder) {
    if (ladder.size() < 4) throw PreconditionError("structure_exponent: ladder needs at least 4 entries");
    if (!(q >= 1.0)) throw PreconditionError("structure_exponent: q must be at least 1");
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        if (!(ladder[k] > 0.0) || (k > 0 && !(ladder[k] < ladder[k - 1]))) {
            throw PreconditionError("structure_exponent: ladder must be positive and strictly decreasing");
        }
    }
    const Mask region = U & m.mask;
    if (region.empty()) throw PreconditionError("structure_exponent: empty region");
    const double reach = region.distance_to_complement(m.mask);
    if (ladder.front() > reach) {
        std::ostringstream os;
        os << "structure_exponent: |h| = " << ladder.front() << " exceeds dist(U, boundary) = " << reach;
        throw PreconditionError(os.str());
    }

    StructureReport rep;
    rep.q = q;
    rep.ladder = ladder;
    const std::size_t nl = ladder.size();
    rep.samples.resize(8 * nl);
    parallel_rows(static_cast<int>(8 * nl), [&](int idx) {
        const int dir = idx / static_cast<int>(nl);
        const double len = ladder[static_cast<std::size_t>(idx) % nl];
        const Vec2 h = len * unit(dir * kPi / 4);
        StructureSample s;
        s.direction = dir;
        s.h = h;
        s.length = len;
        const VectorField2 d = finite_difference(m, h, DiffMode::D, region);
        s.norm = lp_norm(d, q);
        s.scaled = s.norm / std::cbrt(len);
        rep.samples[static_cast<std::size_t>(idx)] = s;
    });

    double slope_sum = 0, rms_sum = 0;
    int used = 0;
    for (int dir = 0; dir < 8; ++dir) {
        std::vector<double> x, y;
        bool zero = false;
        for (std::size_t k = 0; k < nl; ++k) {
            const auto& s = rep.samples[static_cast<std::size_t>(dir) * nl + k];
            if (!(s.norm > 0.0)) {
                zero = true;
                break;
            }
            x.push_back(std::log(s.length));
            y.push_back(std::log(s.norm));
        }
        if (zero) {
            rep.direction_slopes.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const Fit f = least_squares(x, y);
        rep.direction_slopes.push_back(f.slope);
        slope_sum += f.slope;
        rms_sum += f.rms * f.rms;
        ++used;
    }
    if (used == 0) throw PreconditionError("structure_exponent: all structure functions vanish");
    rep.slope = slope_sum / used;
    rep.residual = std::sqrt(rms_sum / used);
    for (const auto& s : rep.samples) rep.seminorm = std::max(rep.seminorm, s.scaled);
    return rep;
}

StructureReport besov_seminorm(const AngleField& m, double p, const Mask& U, const std::vector<double>& ladder) {
    if (!(p >= 1.0)) throw PreconditionError("besov_seminorm: p must be at least 1");
    const Mask region = U & m.mask;
    if (region.empty()) throw PreconditionError("besov_seminorm: empty region");
    // a constant field has a vanishing seminorm rather than an undefined slope
    bool constant = true;
    double first = 0.0;
    bool have = false;
    for (std::size_t k = 0; k < m.theta.size() && constant; ++k) {
        if (!region[k]) continue;
        if (!have) {
            first = m.theta[k];
            have = true;
        } else if (m.theta[k] != first) {
            constant = false;
        }
    }
    if (constant) {
        StructureReport rep;
        rep.q = 3 * p;
        rep.ladder = ladder;
        return rep;
    }
    return structure_exponent(m, 3 * p, U, ladder);
}

}  // namespace eklab
