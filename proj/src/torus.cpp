#include "eklab/torus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace eklab {

TorusFunction TorusFunction::from_samples(std::vector<double> samples, Symmetry sym) {
    const int n = static_cast<int>(samples.size());
    if (n < 64 || n % 2 != 0) {
        throw PreconditionError("TorusFunction needs an even sample count >= 64 (got " + std::to_string(n) + ")");
    }
    for (double v : samples) {
        if (!std::isfinite(v)) throw PreconditionError("TorusFunction samples must be finite");
    }
    TorusFunction t;
    t.samples_ = std::move(samples);
    t.sym_ = sym;
    t.fit_coefficients();
    t.check_symmetry();
    return t;
}

TorusFunction TorusFunction::from_closed_form(std::function<double(double)> f, int n, Symmetry sym) {
    if (n < 64 || n % 2 != 0) throw PreconditionError("TorusFunction needs an even sample count >= 64");
    std::vector<double> s(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) s[static_cast<std::size_t>(k)] = f(kTwoPi * k / n);
    TorusFunction t = from_samples(std::move(s), sym);
    t.closed_ = std::move(f);
    return t;
}

void TorusFunction::fit_coefficients() {
    const int n = size();
    const int half = n / 2;
    a_.assign(static_cast<std::size_t>(half + 1), 0.0);
    b_.assign(static_cast<std::size_t>(half + 1), 0.0);
    for (int m = 0; m <= half; ++m) {
        double sa = 0.0, sb = 0.0;
        for (int k = 0; k < n; ++k) {
            const double ang = kTwoPi * static_cast<double>((static_cast<long>(m) * k) % n) / n;
            sa += samples_[static_cast<std::size_t>(k)] * std::cos(ang);
            sb += samples_[static_cast<std::size_t>(k)] * std::sin(ang);
        }
        const double scale = (m == 0 || m == half) ? 1.0 / n : 2.0 / n;
        a_[static_cast<std::size_t>(m)] = sa * scale;
        b_[static_cast<std::size_t>(m)] = (m == half) ? 0.0 : sb * scale;
    }
}

double TorusFunction::odd_defect() const {
    const int n = size();
    double d = 0.0;
    for (int k = 0; k < n; ++k) {
        d = std::max(d, std::abs(samples_[static_cast<std::size_t>(k)] + samples_[static_cast<std::size_t>((n - k) % n)]));
    }
    return d;
}

double TorusFunction::pi_periodic_defect() const {
    const int n = size();
    double d = 0.0;
    for (int k = 0; k < n / 2; ++k) {
        d = std::max(d, std::abs(samples_[static_cast<std::size_t>(k)] - samples_[static_cast<std::size_t>(k + n / 2)]));
    }
    return d;
}

double TorusFunction::sup_norm() const {
    double m = 0.0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
}

void TorusFunction::check_symmetry() const {
    const double tol = 1e-10 * std::max(1.0, sup_norm());
    if (sym_.odd && odd_defect() > tol) {
        throw PreconditionError("TorusFunction declared odd but odd defect is " + std::to_string(odd_defect()));
    }
    if (sym_.pi_periodic && pi_periodic_defect() > tol) {
        throw PreconditionError("TorusFunction declared pi-periodic but defect is " +
                                std::to_string(pi_periodic_defect()));
    }
}

double TorusFunction::operator()(double s) const {
    if (closed_) return closed_(s);
    const int half = size() / 2;
    double v = a_[0];
    const double c1 = std::cos(s), s1 = std::sin(s);
    double cm = 1.0, sm = 0.0;
    for (int m = 1; m <= half; ++m) {
        const double cn = cm * c1 - sm * s1;
        sm = sm * c1 + cm * s1;
        cm = cn;
        v += a_[static_cast<std::size_t>(m)] * cm + b_[static_cast<std::size_t>(m)] * sm;
    }
    return v;
}

double TorusFunction::derivative(double s) const {
    if (closed_) {
        const double h = 1e-4;
        return (-closed_(s + 2 * h) + 8 * closed_(s + h) - 8 * closed_(s - h) + closed_(s - 2 * h)) / (12 * h);
    }
    const int half = size() / 2;
    double v = 0.0;
    const double c1 = std::cos(s), s1 = std::sin(s);
    double cm = 1.0, sm = 0.0;
    for (int m = 1; m <= half; ++m) {
        const double cn = cm * c1 - sm * s1;
        sm = sm * c1 + cm * s1;
        cm = cn;
        v += m * (-a_[static_cast<std::size_t>(m)] * sm + b_[static_cast<std::size_t>(m)] * cm);
    }
    return v;
}

Vec2 TorusFunction::first_moment() const {
    const int n = size();
    std::vector<double> cx(static_cast<std::size_t>(n)), cy(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double s = kTwoPi * k / n;
        cx[static_cast<std::size_t>(k)] = samples_[static_cast<std::size_t>(k)] * std::cos(s);
        cy[static_cast<std::size_t>(k)] = samples_[static_cast<std::size_t>(k)] * std::sin(s);
    }
    const double w = kTwoPi / n;
    return {w * pairwise_sum(cx), w * pairwise_sum(cy)};
}

}  // namespace eklab
