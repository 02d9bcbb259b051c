#include "brake/displacement.hpp"

namespace brake {

namespace {

// Bump (35/32)(1 - v^2)^3 on [-1, 1], its derivative and its primitive.
double bump(double v) {
    if (std::abs(v) >= 1.0) return 0.0;
    const double w = 1.0 - v * v;
    return 35.0 / 32.0 * w * w * w;
}

double bump_d1(double v) {
    if (std::abs(v) >= 1.0) return 0.0;
    const double w = 1.0 - v * v;
    return -35.0 / 32.0 * 6.0 * v * w * w;
}

double bump_cdf(double v) {
    if (v <= -1.0) return 0.0;
    if (v >= 1.0) return 1.0;
    const double v2 = v * v;
    return 0.5 + 35.0 / 32.0 * v * (1.0 - v2 + v2 * v2 * 3.0 / 5.0 - v2 * v2 * v2 / 7.0);
}

bool vanishes_near(const HamiltonianModel& H, const Vec& c, double r, unsigned seed) {
    std::mt19937_64 rng(seed);
    if (std::abs(H.value(c)) > 1e-14) return false;
    for (int i = 0; i < 400; ++i) {
        const Vec z = c + sample_ball(H.n(), r, rng);
        if (std::abs(H.value(z)) > 1e-14) return false;
    }
    return true;
}

}  // namespace

Displacement::Displacement(Vec z0, double delta, int steps) : z0_(std::move(z0)), delta_(delta), steps_(steps) {
    const int n = half_dim(z0_);
    if (!(delta > 0.0)) throw Error("displacement needs delta > 0");
    if (!z0_.head(n).isZero(0.0)) throw Error("displacement target z0 is not in L0");
    length_ = z0_.norm();
    identity_ = length_ == 0.0;
    p_ = -apply_J(z0_);
    Q_ = Mat::Zero(2 * n, 2 * n);
    if (!identity_) {
        const Vec v = z0_.tail(n) / length_;
        const Mat vm = v;
        Eigen::HouseholderQR<Mat> qr(vm);
        Mat Y = qr.householderQ() * Mat::Identity(n, n);
        Y.col(0) = v;
        Q_.block(n, 0, n, 1) = v;
        for (int j = 0; j < n; ++j) Q_(j, 1 + j) = 1.0;
        Q_.block(n, n + 1, n, n - 1) = Y.rightCols(n - 1);
    }
}

double Displacement::tube_extent() const {
    const int n = half_dim(z0_);
    const double a = length_ + 2.0 * delta_, w = 2.0 * delta_;
    return std::sqrt(a * a + (2 * n - 1) * w * w);
}

void Displacement::frame_derivs(const Vec& u, Vec& R, Vec& R1, Vec& R2) const {
    const Eigen::Index d = u.size();
    const double h = 0.5 * delta_;
    R.resize(d);
    R1.resize(d);
    R2.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double lo = -delta_, hi = (i == 0 ? length_ : 0.0) + delta_;
        const double va = (u(i) - lo) / h, vb = (u(i) - hi) / h;
        R(i) = bump_cdf(va) - bump_cdf(vb);
        R1(i) = (bump(va) - bump(vb)) / h;
        R2(i) = (bump_d1(va) - bump_d1(vb)) / (h * h);
    }
}

double Displacement::rho(const Vec& z) const {
    if (identity_) return 0.0;
    Vec R, R1, R2;
    frame_derivs(Q_.transpose() * z, R, R1, R2);
    return R.prod();
}

Vec Displacement::rho_gradient(const Vec& z) const {
    const Eigen::Index d = z.size();
    if (identity_) return Vec::Zero(d);
    Vec R, R1, R2;
    frame_derivs(Q_.transpose() * z, R, R1, R2);
    Vec g(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        double p = R1(i);
        for (Eigen::Index j = 0; j < d; ++j)
            if (j != i) p *= R(j);
        g(i) = p;
    }
    return Q_ * g;
}

double Displacement::K(const Vec& z) const { return rho(z) * z.dot(p_); }

Vec Displacement::grad_K(const Vec& z) const {
    if (identity_) return Vec::Zero(z.size());
    return rho(z) * p_ + z.dot(p_) * rho_gradient(z);
}

Mat Displacement::hess_K(const Vec& z) const {
    const Eigen::Index d = z.size();
    if (identity_) return Mat::Zero(d, d);
    Vec R, R1, R2;
    frame_derivs(Q_.transpose() * z, R, R1, R2);
    Mat Hu(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            double p = 1.0;
            for (Eigen::Index k = 0; k < d; ++k) {
                if (k == i && k == j)
                    p *= R2(k);
                else if (k == i || k == j)
                    p *= R1(k);
                else
                    p *= R(k);
            }
            Hu(i, j) = p;
        }
    const Vec g = rho_gradient(z);
    return g * p_.transpose() + p_ * g.transpose() + z.dot(p_) * (Q_ * Hu * Q_.transpose());
}

Vec Displacement::apply(const Vec& z) const {
    if (identity_) return z;
    const double h = 1.0 / steps_;
    Vec x = z;
    for (int s = 0; s < steps_; ++s) {
        const Vec k1 = field(x);
        const Vec k2 = field(x + 0.5 * h * k1);
        const Vec k3 = field(x + 0.5 * h * k2);
        const Vec k4 = field(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

std::pair<Vec, Mat> Displacement::apply_with_jacobian(const Vec& z) const {
    const Eigen::Index d = z.size();
    if (identity_) return {z, Mat::Identity(d, d)};
    const Mat J = J_matrix(static_cast<int>(d / 2));
    const double h = 1.0 / steps_;
    Vec x = z;
    Mat P = Mat::Identity(d, d);
    auto f = [&](const Vec& y, const Mat& Y) { return std::make_pair(field(y), Mat(J * hess_K(y) * Y)); };
    for (int s = 0; s < steps_; ++s) {
        const auto [k1, m1] = f(x, P);
        const auto [k2, m2] = f(x + 0.5 * h * k1, P + 0.5 * h * m1);
        const auto [k3, m3] = f(x + 0.5 * h * k2, P + 0.5 * h * m2);
        const auto [k4, m4] = f(x + h * k3, P + h * m3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        P += h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
    }
    return {x, P};
}

DisplacedModel::DisplacedModel(ModelPtr H, DisplacementPtr psi, unsigned seed) : H_(std::move(H)), psi_(std::move(psi)) {
    M_ = H_->grad_lipschitz();
    if (psi_->is_identity()) return;
    // sampled Hessian norm of H o psi over the tube, where psi differs from the identity
    std::mt19937_64 rng(seed);
    const int n = H_->n();
    const double r = psi_->tube_extent();
    double sup = 0.0;
    for (int i = 0; i < 60; ++i) {
        const Vec z = sample_ball(n, r, rng);
        const Mat Hs = HamiltonianModel::hessian(z);
        Eigen::SelfAdjointEigenSolver<Mat> es(Hs);
        sup = std::max(sup, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    M_ = std::max(M_, 1.5 * sup);
}

double DisplacedModel::value(const Vec& z) const { return H_->value(psi_->apply(z)); }

Vec DisplacedModel::gradient(const Vec& z) const {
    const auto [w, D] = psi_->apply_with_jacobian(z);
    return D.transpose() * H_->gradient(w);
}

TranslatedModel::TranslatedModel(ModelPtr H, Vec z0) : H_(std::move(H)), z0_(std::move(z0)) {
    const int n = half_dim(z0_);
    if (!z0_.head(n).isZero(0.0)) throw Error("translation vector is not in L0");
}

DisplacementResult displace_to_origin(ModelPtr H, const Vec& z0, double delta, double domain_radius) {
    const int n = H->n();
    if (z0.size() != 2 * n) throw Error("displacement target has wrong dimension");
    if (!z0.head(n).isZero(0.0)) throw Error("displacement target z0 is not in L0");
    if (vanishes_near(*H, Vec::Zero(2 * n), 0.5 * delta, 3)) {
        return {H, std::make_shared<Displacement>(Vec::Zero(2 * n), delta)};
    }
    auto psi = std::make_shared<Displacement>(z0, delta);
    if (psi->tube_extent() >= domain_radius) throw Error("displacement tube A(2 delta) does not fit in the domain");
    if (!vanishes_near(*H, z0, 0.5 * delta, 5)) throw Error("H does not vanish near the displacement target");
    return {std::make_shared<DisplacedModel>(H, psi), psi};
}

}  // namespace brake
