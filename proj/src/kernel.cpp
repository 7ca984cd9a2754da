#include "eklab/kernel.hpp"

#include <cmath>

#include "eklab/common.hpp"
#include "eklab/quadrature.hpp"

namespace eklab {

namespace {

constexpr double kQuarter = kPi / 4;

// Reduces t to r in (-pi/2, pi/2] with t = r mod pi.
double reduce(double t) {
    double r = std::fmod(t, kPi);
    if (r > kPi / 2) r -= kPi;
    if (r <= -kPi / 2) r += kPi;
    return r;
}

}  // namespace

TestKernel TestKernel::power(double gamma, double eps) {
    if (!(gamma > 0.0)) throw PreconditionError("kernel exponent gamma must be positive");
    TestKernel k;
    k.kind_ = Kind::power;
    k.gamma_ = gamma;
    k.eps_ = gamma <= 1.0 ? eps : 0.0;
    if (k.regularized() && !(eps > 0.0)) throw PreconditionError("kernel regularization eps must be positive");
    k.a_ = k.core(kQuarter);
    k.g_ = k.core_derivative(kQuarter);
    return k;
}

TestKernel TestKernel::sine() {
    TestKernel k;
    k.kind_ = Kind::sine;
    k.gamma_ = 1.0;
    return k;
}

double TestKernel::core(double u) const {
    if (eps_ > 0.0) return std::pow(u * u + eps_ * eps_, 0.5 * (gamma_ - 1.0)) * u;
    return std::pow(u, gamma_);
}

double TestKernel::core_derivative(double u) const {
    if (eps_ > 0.0) {
        const double q = u * u + eps_ * eps_;
        return std::pow(q, 0.5 * (gamma_ - 3.0)) * (gamma_ * u * u + eps_ * eps_);
    }
    if (u == 0.0) return gamma_ > 1.0 ? 0.0 : (gamma_ == 1.0 ? 1.0 : HUGE_VAL);
    return gamma_ * std::pow(u, gamma_ - 1.0);
}

double TestKernel::operator()(double t) const {
    if (kind_ == Kind::sine) return std::sin(2 * t);
    const double r = reduce(t);
    const double u = std::abs(r);
    double v;
    if (u <= kQuarter) {
        v = core(u);
    } else {
        const double w = (u - kQuarter) / kQuarter;
        v = a_ * (2 * w * w * w - 3 * w * w + 1) + kQuarter * g_ * (w - w * w);
    }
    return r < 0 ? -v : v;
}

double TestKernel::derivative(double t) const {
    if (kind_ == Kind::sine) return 2 * std::cos(2 * t);
    const double u = std::abs(reduce(t));
    if (u <= kQuarter) return core_derivative(u);
    const double w = (u - kQuarter) / kQuarter;
    return a_ * (6 * w * w - 6 * w) / kQuarter + g_ * (1 - 2 * w);
}

void TestKernel::seams(double a, double b, double c, std::vector<double>& out) const {
    quad::lattice_points_in(a, b, c, kQuarter, out);
}

double TestKernel::l1_norm() const {
    // |phi| is pi/2-symmetric: four copies of int_0^{pi/2} |phi|
    const double br[] = {kQuarter};
    return 4.0 * quad::integrate([this](double t) { return std::abs((*this)(t)); }, 0.0, kPi / 2, br);
}

double TestKernel::derivative_l1_norm() const {
    const double br[] = {kQuarter};
    quad::Options opt;
    opt.grade_levels = regularized() ? 12 : 0;
    return 4.0 * quad::integrate([this](double t) { return std::abs(derivative(t)); }, 0.0, kPi / 2, br, opt);
}

}  // namespace eklab
