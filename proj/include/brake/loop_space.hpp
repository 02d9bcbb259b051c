#pragma once

// Truncated symmetric loop space.
//
// A loop is x(t) = sum_{|j| <= kmax} e^{2 pi j J t} x_j with every x_j in
// L0 = {0} x R^n, so only the y-part of each coefficient is stored. Under
// the identification (x, y) <-> x + i y the rotation e^{theta J} becomes
// multiplication by e^{i theta}, and x_j = (0, c_j) contributes
// (-sin(2 pi j t) c_j, cos(2 pi j t) c_j) to x(t).

#include "brake/phase.hpp"

#include <iosfwd>
#include <map>
#include <string>

namespace brake {

enum class Sector { plus, minus, zero };

/// Sobolev index s in {0, 1/2, 1} of the weighted inner products.
enum class Sobolev { L2, Half, One };

class FourierLoop {
public:
    FourierLoop() = default;
    /// Zero loop.
    FourierLoop(int n, int kmax);
    /// `coeffs` is (2 kmax + 1) x n; row j + kmax holds the y-part of x_j.
    FourierLoop(int n, int kmax, Mat coeffs);

    int n() const { return n_; }
    int kmax() const { return kmax_; }
    int num_modes() const { return 2 * kmax_ + 1; }

    const Mat& coeffs() const { return c_; }
    /// y-part of mode j.
    Vec mode(int j) const;
    /// Full 2n-vector x_j = (0, c_j).
    Vec coefficient(int j) const;

    /// Coefficients flattened mode-major, length n (2 kmax + 1).
    Vec flatten() const;
    static FourierLoop unflatten(int n, int kmax, const Vec& v);

    bool same_shape(const FourierLoop& o) const { return n_ == o.n_ && kmax_ == o.kmax_; }

private:
    int n_ = 0;
    int kmax_ = 0;
    Mat c_;
};

FourierLoop operator+(const FourierLoop& a, const FourierLoop& b);
FourierLoop operator-(const FourierLoop& a, const FourierLoop& b);
FourierLoop operator*(double s, const FourierLoop& a);

/// Loop with unconstrained coefficients y_j in R^{2n}.
class L2Loop {
public:
    L2Loop() = default;
    L2Loop(int n, int kmax);
    /// `coeffs` is (2 kmax + 1) x 2n.
    L2Loop(int n, int kmax, Mat coeffs);

    int n() const { return n_; }
    int kmax() const { return kmax_; }
    const Mat& coeffs() const { return c_; }
    Vec coefficient(int j) const { return c_.row(j + kmax_).transpose(); }

private:
    int n_ = 0;
    int kmax_ = 0;
    Mat c_;
};

/// Builds a loop from sparse 2n-vector coefficients. Throws on a dimension
/// mismatch, on |j| > kmax, or on any nonzero x-part (exact zero required).
FourierLoop make_loop(int n, int kmax, const std::map<int, Vec>& coeffs);

/// Default time-sample count 4 kmax + 1.
inline int default_samples(int kmax) { return 4 * kmax + 1; }

/// Cached trigonometric tables for evaluating loops of order kmax on the
/// grid t_i = i / N and for the discrete transform back to modes.
class SpectralGrid {
public:
    /// Throws when N < 2 kmax + 1.
    SpectralGrid(int kmax, int num_samples);

    int kmax() const { return kmax_; }
    int num_samples() const { return N_; }
    double time(int i) const { return static_cast<double>(i) / N_; }

    /// N x 2n matrix of x(t_i).
    Mat evaluate(const FourierLoop& x) const;
    /// N x 2n matrix of x'(t_i).
    Mat velocity(const FourierLoop& x) const;
    /// Discrete transform of N x 2n samples of an R^{2n}-valued function;
    /// modes above kmax are discarded.
    L2Loop transform(const Mat& samples) const;
    /// i*-part of the transform only: (2 kmax + 1) x n matrix of Im(a_k).
    Mat transform_L0(const Mat& samples) const;

private:
    int kmax_;
    int N_;
    Mat cos_;  // N x (2 kmax + 1)
    Mat sin_;
};

/// Samples of x at t_i = i / num_samples.
Mat evaluate(const FourierLoop& x, int num_samples);
/// Velocity samples.
Mat evaluate_velocity(const FourierLoop& x, int num_samples);
/// x(t) and x'(t) at an arbitrary time.
Vec evaluate_at(const FourierLoop& x, double t);
Vec velocity_at(const FourierLoop& x, double t);

FourierLoop project(const FourierLoop& x, Sector sector);

double inner(const FourierLoop& a, const FourierLoop& b, Sobolev s);
double norm(const FourierLoop& a, Sobolev s = Sobolev::Half);
double inner(const L2Loop& a, const L2Loop& b);
double norm(const L2Loop& a);

/// Weight of mode k in the s-inner product.
double mode_weight(int k, Sobolev s);

/// The inclusion j: X -> L^2.
L2Loop embed(const FourierLoop& x);

/// j*: coefficient k is i*(y_k) / (2 pi |k|) for k != 0 and i*(y_0) for k = 0.
FourierLoop adjoint_embed(const L2Loop& y);

/// Keeps the modes j = 1 (mod m); the result satisfies x(t + 1/m) = S x(t)
/// with S = e^{2 pi J / m}.
FourierLoop s_symmetry_project(const FourierLoop& x, int m);

/// Same loop resized to another truncation order (zero padding or cut).
FourierLoop resize(const FourierLoop& x, int kmax);

/// Text record: "loop <n> <kmax>" followed by one line "j v_1 ... v_2n" per
/// mode. Doubles are written in shortest round-trip form.
void write_loop(std::ostream& os, const FourierLoop& x);
FourierLoop read_loop(std::istream& is);
std::string to_string(const FourierLoop& x);
FourierLoop loop_from_string(const std::string& s);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace brake
