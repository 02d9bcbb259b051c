#pragma once

// Linear structure of (R^{2n}, omega_0): z = (x, y) with the x-part in the
// first n slots and the y-part in the last n.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace brake {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Half-dimension of a phase point; throws when the length is odd.
inline int half_dim(const Vec& z) {
    if (z.size() % 2 != 0 || z.size() == 0)
        throw Error("phase point must have even positive length, got " + std::to_string(z.size()));
    return static_cast<int>(z.size() / 2);
}

/// J(x, y) = (-y, x).
inline Vec apply_J(const Vec& z) {
    const int n = half_dim(z);
    Vec out(2 * n);
    out.head(n) = -z.tail(n);
    out.tail(n) = z.head(n);
    return out;
}

/// N0(x, y) = (-x, y); fixed set is L0 = {0} x R^n.
inline Vec apply_N0(const Vec& z) {
    const int n = half_dim(z);
    Vec out = z;
    out.head(n) = -z.head(n);
    return out;
}

/// N1(x, y) = (x, -y); fixed set is R^n x {0}.
inline Vec apply_N1(const Vec& z) {
    const int n = half_dim(z);
    Vec out = z;
    out.tail(n) = -z.tail(n);
    return out;
}

/// e^{theta J} = cos(theta) I + sin(theta) J, acting plane by plane.
inline Vec rotate(const Vec& z, double theta) {
    return std::cos(theta) * z + std::sin(theta) * apply_J(z);
}

/// Projection i* of R^{2n} onto L0: zero the x-part.
inline Vec project_L0(const Vec& z) {
    const int n = half_dim(z);
    Vec out = z;
    out.head(n).setZero();
    return out;
}

/// The matrix J of size 2n.
inline Mat J_matrix(int n) {
    Mat J = Mat::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = -Mat::Identity(n, n);
    J.bottomLeftCorner(n, n) = Mat::Identity(n, n);
    return J;
}

inline Mat N0_matrix(int n) {
    Mat N = Mat::Identity(2 * n, 2 * n);
    N.topLeftCorner(n, n) *= -1.0;
    return N;
}

/// omega_0(u, v) = sum_k (u_xk v_yk - u_yk v_xk) = <J u, v>.
inline double omega0(const Vec& u, const Vec& v) {
    return apply_J(u).dot(v);
}

}  // namespace brake
