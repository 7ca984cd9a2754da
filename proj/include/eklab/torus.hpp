#pragma once

#include <functional>
#include <vector>

#include "eklab/common.hpp"

namespace eklab {

struct TorusSymmetry {
    bool odd = false;
    bool pi_periodic = false;
};

// A function on T = R / 2piZ held as N uniform samples s_k = 2pi k / N, with
// an optional closed form. Without a closed form, evaluation uses the
// trigonometric interpolant of the samples.
class TorusFunction {
public:
    using Symmetry = TorusSymmetry;

    static TorusFunction from_samples(std::vector<double> samples, Symmetry sym = {});
    static TorusFunction from_closed_form(std::function<double(double)> f, int n = 256, Symmetry sym = {});

    double operator()(double s) const;
    double derivative(double s) const;

    int size() const { return static_cast<int>(samples_.size()); }
    const std::vector<double>& samples() const { return samples_; }
    Symmetry symmetry() const { return sym_; }
    bool has_closed_form() const { return static_cast<bool>(closed_); }

    // int_T psi(s) e^{is} ds by the (spectrally accurate) periodic trapezoid rule.
    Vec2 first_moment() const;
    double sup_norm() const;

    // Measured defects of the symmetry flags on the samples.
    double odd_defect() const;
    double pi_periodic_defect() const;

private:
    TorusFunction() = default;
    void fit_coefficients();
    void check_symmetry() const;

    std::vector<double> samples_;
    std::function<double(double)> closed_;
    Symmetry sym_{};
    std::vector<double> a_;  // cosine coefficients, a_[0] is the mean
    std::vector<double> b_;  // sine coefficients
};

}  // namespace eklab
