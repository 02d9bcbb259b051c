#pragma once

// Extension of a plateau Hamiltonian on E_K = {q_K < 1} to a Hamiltonian
// that is quadratic at infinity: Hbar = H on E_K and f(q_K) outside.

#include "brake/hamiltonian.hpp"

namespace brake {

/// f(s) = m for s <= 1, f(s) = c s for s >= s_inf, and on [1, s_inf]
/// f(s) = c s + (m - c) P((s - 1) / L) with P(u) = (1 - u)^3 (1 + u).
/// The choice L = 2 (m - c) / c makes f' = c (1 - (1 - u)^2 (1 + 2u)),
/// so 0 < f' <= c on (1, s_inf) and f >= c s everywhere.
class ExtensionProfile : public Profile {
public:
    ExtensionProfile(double m, double c);
    double value(double s) const override;
    double d1(double s) const override;
    double d2(double s) const override;
    double m() const { return m_; }
    double c() const { return c_; }
    double s_inf() const { return 1.0 + L_; }

private:
    double m_, c_, L_;
};

class ExtendedHamiltonian : public HamiltonianModel {
public:
    /// Throws when the base has no plateau, when m(H) <= pi radius^2 + eps,
    /// or when the base is not constant at the gluing locus.
    ExtendedHamiltonian(ModelPtr base, QuadraticForm q, double eps, unsigned seed = 1);

    int n() const override { return q_.n(); }
    double value(const Vec& z) const override;
    Vec gradient(const Vec& z) const override;
    Mat hessian(const Vec& z) const override;
    double grad_lipschitz() const override { return M_; }
    std::optional<double> vanish_radius() const override { return base_->vanish_radius(); }
    Symmetry symmetry() const override;
    std::string name() const override { return "extended(" + base_->name() + ")"; }

    const HamiltonianModel& base() const { return *base_; }
    ModelPtr base_ptr() const { return base_; }
    const QuadraticForm& form() const { return q_; }
    const ExtensionProfile& profile() const { return f_; }
    double eps() const { return eps_; }
    /// Slope at infinity, pi radius^2 + eps.
    double slope() const { return f_.c(); }
    double plateau_value() const { return f_.m(); }
    /// Hbar(z) >= slope q_K(z) - gamma everywhere.
    double gamma() const { return gamma_; }
    /// Hbar = slope q_K for |z| >= R.
    double crossover_radius() const { return R_; }

private:
    ModelPtr base_;
    QuadraticForm q_;
    double eps_;
    ExtensionProfile f_;
    double gamma_ = 0.0;
    double R_ = 0.0;
    double M_ = 0.0;
};

using ExtendedPtr = std::shared_ptr<const ExtendedHamiltonian>;

ExtendedPtr extend(ModelPtr H, const QuadraticForm& q, double eps);

/// Point with q(z) = s in a random direction.
Vec sample_q_level(const QuadraticForm& q, double s, std::mt19937_64& rng);

}  // namespace brake
