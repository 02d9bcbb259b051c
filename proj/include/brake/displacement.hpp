#pragma once

// Moving the vanishing set of H onto the origin with an N0-equivariant
// symplectic map.
//
// For z0 = (0, v0) in L0 the cutoff Hamiltonian K(z) = rho(z) <z, -J z0>
// has field X_K = z0 wherever rho = 1, so its time-1 flow psi translates a
// neighbourhood of 0 onto a neighbourhood of z0. rho is the indicator of the
// box tube A(delta) around the segment [0, z0] (in a frame adapted to z0)
// convolved with a product of polynomial bumps of half-width delta / 2. It
// equals 1 on A(delta / 2) and vanishes outside A(3 delta / 2).

#include "brake/hamiltonian.hpp"

namespace brake {

class Displacement {
public:
    /// Throws when z0 is not in L0 or delta <= 0. z0 = 0 gives the identity.
    Displacement(Vec z0, double delta, int steps = 256);

    bool is_identity() const { return identity_; }
    const Vec& z0() const { return z0_; }
    double delta() const { return delta_; }
    /// Largest |z| over the closed tube A(2 delta).
    double tube_extent() const;

    double rho(const Vec& z) const;
    Vec rho_gradient(const Vec& z) const;
    double K(const Vec& z) const;
    Vec grad_K(const Vec& z) const;
    Mat hess_K(const Vec& z) const;
    Vec field(const Vec& z) const { return apply_J(grad_K(z)); }

    /// psi(z), by RK4 on X_K over unit time.
    Vec apply(const Vec& z) const;
    /// psi(z) together with D psi(z) from the variational equation.
    std::pair<Vec, Mat> apply_with_jacobian(const Vec& z) const;

private:
    void frame_derivs(const Vec& u, Vec& R, Vec& R1, Vec& R2) const;
    Vec z0_;
    double delta_;
    int steps_;
    bool identity_ = false;
    double length_ = 0.0;
    Mat Q_;  // orthonormal frame, column 0 along z0
    Vec p_;  // -J z0
};

using DisplacementPtr = std::shared_ptr<const Displacement>;

/// H o psi.
class DisplacedModel : public HamiltonianModel {
public:
    DisplacedModel(ModelPtr H, DisplacementPtr psi, unsigned seed = 1);
    int n() const override { return H_->n(); }
    double value(const Vec& z) const override;
    Vec gradient(const Vec& z) const override;
    double grad_lipschitz() const override { return M_; }
    std::optional<double> plateau() const override { return H_->plateau(); }
    std::optional<double> vanish_radius() const override { return 0.5 * psi_->delta(); }
    Symmetry symmetry() const override { return {H_->symmetry().n0_invariant, {}}; }
    std::string name() const override { return "displaced(" + H_->name() + ")"; }

private:
    ModelPtr H_;
    DisplacementPtr psi_;
    double M_ = 0.0;
};

/// H(z + z0) for z0 in L0; symplectic and N0-equivariant as well.
class TranslatedModel : public HamiltonianModel {
public:
    TranslatedModel(ModelPtr H, Vec z0);
    int n() const override { return H_->n(); }
    double value(const Vec& z) const override { return H_->value(z + z0_); }
    Vec gradient(const Vec& z) const override { return H_->gradient(z + z0_); }
    Mat hessian(const Vec& z) const override { return H_->hessian(z + z0_); }
    double grad_lipschitz() const override { return H_->grad_lipschitz(); }
    std::optional<double> plateau() const override { return H_->plateau(); }
    Symmetry symmetry() const override { return {H_->symmetry().n0_invariant, {}}; }
    std::string name() const override { return "translated(" + H_->name() + ")"; }

private:
    ModelPtr H_;
    Vec z0_;
};

struct DisplacementResult {
    ModelPtr model;
    DisplacementPtr psi;
};

/// Returns H o psi and psi. psi is the identity when H already vanishes on a
/// ball around 0. Throws when z0 is not in L0, when H does not vanish near
/// z0, or when A(2 delta) leaves the ball of radius `domain_radius`.
DisplacementResult displace_to_origin(ModelPtr H, const Vec& z0, double delta, double domain_radius);

}  // namespace brake
