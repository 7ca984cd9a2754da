#pragma once

#include <vector>

namespace eklab {

// Odd, pi-periodic kernel phi. The power family is t^gamma on (0, pi/4] and a
// cubic Hermite bridge on [pi/4, pi/2] ending at 0 with slope -phi'(pi/4).
// For gamma <= 1 the power is regularized as (t^2 + eps^2)^((gamma-1)/2) t.
class TestKernel {
public:
    enum class Kind { power, sine };

    static TestKernel power(double gamma, double eps = 1e-6);
    static TestKernel sine();  // sin 2t

    Kind kind() const { return kind_; }
    double gamma() const { return gamma_; }
    bool regularized() const { return kind_ == Kind::power && gamma_ <= 1.0; }
    double epsilon() const { return eps_; }

    double operator()(double t) const;
    double derivative(double t) const;

    // Points c + k pi/4 inside (a, b) where the kernel may lose smoothness.
    void seams(double a, double b, double c, std::vector<double>& out) const;

    double l1_norm() const;             // int_T |phi|
    double derivative_l1_norm() const;  // int_T |phi'|

private:
    Kind kind_ = Kind::power;
    double gamma_ = 3.0;
    double eps_ = 0.0;
    double a_ = 0.0;  // phi(pi/4)
    double g_ = 0.0;  // phi'(pi/4)

    double core(double u) const;
    double core_derivative(double u) const;
};

}  // namespace eklab
