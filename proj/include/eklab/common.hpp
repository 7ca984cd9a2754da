#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eklab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Raised when an operation's precondition is violated by its inputs.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised by readers of EKF1 files and config files.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a computation produces non-finite values or diverges.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    Vec2& operator+=(Vec2 b) { x += b.x; y += b.y; return *this; }
    Vec2& operator-=(Vec2 b) { x -= b.x; y -= b.y; return *this; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 unit(double theta) { return {std::cos(theta), std::sin(theta)}; }
// Multiplication by i: rotation by +pi/2.
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

// Deterministic pairwise (cascade) summation; the order depends only on n.
double pairwise_sum(std::span<const double> v);

// Number of worker threads: EKLAB_THREADS if set, else hardware concurrency.
int thread_count();

// Runs body(row) for row in [0, n) over worker threads. Each row must write
// only its own output slots; reductions happen afterwards, serially.
void parallel_rows(int n, const std::function<void(int)>& body);

}  // namespace eklab
