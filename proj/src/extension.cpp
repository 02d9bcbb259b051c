#include "brake/extension.hpp"

namespace brake {

ExtensionProfile::ExtensionProfile(double m, double c) : m_(m), c_(c) {
    if (!(m > c && c > 0.0)) throw Error("extension needs m(H) > slope > 0");
    L_ = 2.0 * (m - c) / c;
}

double ExtensionProfile::value(double s) const {
    if (s <= 1.0) return m_;
    if (s >= 1.0 + L_) return c_ * s;
    const double u = (s - 1.0) / L_;
    const double w = 1.0 - u;
    return c_ * s + (m_ - c_) * w * w * w * (1.0 + u);
}

double ExtensionProfile::d1(double s) const {
    if (s <= 1.0) return 0.0;
    if (s >= 1.0 + L_) return c_;
    const double u = (s - 1.0) / L_;
    return c_ * (1.0 - (1.0 - u) * (1.0 - u) * (1.0 + 2.0 * u));
}

double ExtensionProfile::d2(double s) const {
    if (s <= 1.0 || s >= 1.0 + L_) return 0.0;
    const double u = (s - 1.0) / L_;
    return 6.0 * c_ * u * (1.0 - u) / L_;
}

Vec sample_q_level(const QuadraticForm& q, double s, std::mt19937_64& rng) {
    const Vec d = sample_sphere(q.n(), 1.0, rng);
    return d * std::sqrt(s / q.value(d));
}

namespace {

double checked_plateau(const HamiltonianModel& H) {
    const auto m = H.plateau();
    if (!m) throw Error("extension needs a base Hamiltonian with a plateau value");
    return *m;
}

}  // namespace

ExtendedHamiltonian::ExtendedHamiltonian(ModelPtr base, QuadraticForm q, double eps, unsigned seed)
    : base_(std::move(base)), q_(q), eps_(eps),
      f_(checked_plateau(*base_), kPi * q.radius() * q.radius() + eps) {
    if (!(eps > 0.0)) throw Error("extension needs eps > 0");
    if (base_->n() != q_.n()) throw Error("extension: dimension mismatch");
    const double m = f_.m();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.99, 1.0);
    for (int i = 0; i < 400; ++i) {
        const Vec z = sample_q_level(q_, u(rng), rng);
        if (std::abs(base_->value(z) - m) > 1e-12 * (1.0 + m))
            throw Error("extension: base Hamiltonian is not constant at the gluing locus");
    }

    gamma_ = f_.c();
    R_ = std::sqrt(f_.s_inf() / q_.min_weight());

    // Hessian of f(q) is f' D^2 q + f'' grad q grad q^T, with |grad q|^2 <= 4 w_max q.
    const double wmax = q_.weight(0);
    double sup = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double s = 1.0 + f_.s_inf() * i / 2000.0;
        sup = std::max(sup, 2.0 * wmax * f_.d1(s) + 4.0 * wmax * s * std::abs(f_.d2(s)));
    }
    M_ = std::max(base_->grad_lipschitz(), sup);
}

double ExtendedHamiltonian::value(const Vec& z) const {
    const double s = q_.value(z);
    return s < 1.0 ? base_->value(z) : f_.value(s);
}

Vec ExtendedHamiltonian::gradient(const Vec& z) const {
    const double s = q_.value(z);
    return s < 1.0 ? base_->gradient(z) : Vec(f_.d1(s) * q_.gradient(z));
}

Mat ExtendedHamiltonian::hessian(const Vec& z) const {
    const double s = q_.value(z);
    if (s < 1.0) return base_->hessian(z);
    const int n = q_.n();
    const Vec g = q_.gradient(z);
    Mat Hs = f_.d2(s) * g * g.transpose();
    for (int j = 0; j < n; ++j) {
        Hs(j, j) += 2.0 * f_.d1(s) * q_.weight(j);
        Hs(n + j, n + j) += 2.0 * f_.d1(s) * q_.weight(j);
    }
    return Hs;
}

Symmetry ExtendedHamiltonian::symmetry() const { return base_->symmetry(); }

ExtendedPtr extend(ModelPtr H, const QuadraticForm& q, double eps) {
    return std::make_shared<ExtendedHamiltonian>(std::move(H), q, eps);
}

}  // namespace brake
