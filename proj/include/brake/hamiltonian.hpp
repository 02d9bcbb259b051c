#pragma once

// Hamiltonian models on R^{2n}, the quadratic form q_K, scalar profiles and
// the admissibility report for the classes (H1)-(H4) / (HS1)-(HS4).

#include "brake/phase.hpp"
#include "brake/loop_space.hpp"

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace brake {

/// C^2 scalar function of one variable with its first two derivatives.
class Profile {
public:
    virtual ~Profile() = default;
    virtual double value(double s) const = 0;
    virtual double d1(double s) const = 0;
    virtual double d2(double s) const = 0;
};

using ProfilePtr = std::shared_ptr<const Profile>;

/// Quintic smoothstep 10u^3 - 15u^4 + 6u^5, clamped to [0, 1].
double smoothstep(double u);
double smoothstep_d1(double u);
double smoothstep_d2(double u);
/// Integral of smoothstep over [0, u].
double smoothstep_integral(double u);

/// Rises from `low` (s <= s0) to `high` (s >= s1) along a smoothstep.
class RampProfile : public Profile {
public:
    RampProfile(double s0, double s1, double low, double high);
    double value(double s) const override;
    double d1(double s) const override;
    double d2(double s) const override;
    double s0() const { return s0_; }
    double s1() const { return s1_; }

private:
    double s0_, s1_, low_, high_;
};

/// Polynomial a0 + a1 s + a2 s^2 + ...
class PolynomialProfile : public Profile {
public:
    explicit PolynomialProfile(std::vector<double> coeffs);
    double value(double s) const override;
    double d1(double s) const override;
    double d2(double s) const override;

private:
    std::vector<double> a_;
};

/// Symmetry data carried by a model.
struct Symmetry {
    bool n0_invariant = false;
    /// Orders m for which H(e^{2 pi J / m} z) = H(z); 0 means every m.
    std::vector<int> s_orders;
    bool s_invariant(int m) const;
};

/// Evaluatable Hamiltonian with gradient.
class HamiltonianModel {
public:
    virtual ~HamiltonianModel() = default;

    virtual int n() const = 0;
    virtual double value(const Vec& z) const = 0;
    virtual Vec gradient(const Vec& z) const = 0;
    /// Defaults to central differences of the gradient.
    virtual Mat hessian(const Vec& z) const;

    /// Global bound on the operator norm of the Hessian.
    virtual double grad_lipschitz() const = 0;
    /// Constant value outside a compact set, when the model has one.
    virtual std::optional<double> plateau() const { return std::nullopt; }
    /// Radius of a ball around the origin on which H vanishes, when known.
    virtual std::optional<double> vanish_radius() const { return std::nullopt; }
    virtual Symmetry symmetry() const = 0;
    virtual std::string name() const = 0;

    Vec hamiltonian_field(const Vec& z) const { return apply_J(gradient(z)); }
};

using ModelPtr = std::shared_ptr<const HamiltonianModel>;

/// q_K(z) = ((x_1^2 + y_1^2) + K^{-2} sum_{j >= 2} (x_j^2 + y_j^2)) / radius^2.
/// radius = 1 is the form used for Z(1); larger radii rescale the cylinder.
class QuadraticForm {
public:
    QuadraticForm(int n, double K, double radius = 1.0);
    int n() const { return n_; }
    double K() const { return K_; }
    double radius() const { return radius_; }
    double value(const Vec& z) const;
    Vec gradient(const Vec& z) const;
    /// Weight of the plane (x_j, y_j).
    double weight(int j) const;
    double min_weight() const;

private:
    int n_;
    double K_;
    double radius_;
};

/// Named parameter set: "name" plus key/value records.
struct ModelSpec {
    std::string name;
    std::map<std::string, std::string> params;

    double number(const std::string& key, double fallback) const;
    int integer(const std::string& key, int fallback) const;
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
};

/// Model library: quadratic_Q, radial_bump, ellipsoid_level, torus_kinetic,
/// s_symmetric_radial, pinched_star. Throws on an unknown name.
ModelPtr builtin(const ModelSpec& spec);
ModelPtr builtin(const std::string& name, int n, const std::map<std::string, double>& params = {});

/// H(z) = h(|z - c|^2).
class RadialModel : public HamiltonianModel {
public:
    RadialModel(int n, ProfilePtr h, std::string name, Vec center = {},
                std::optional<double> plateau = std::nullopt, std::optional<double> vanish = std::nullopt,
                double lipschitz_smax = 4.0);
    int n() const override { return n_; }
    double value(const Vec& z) const override;
    Vec gradient(const Vec& z) const override;
    Mat hessian(const Vec& z) const override;
    double grad_lipschitz() const override { return lipschitz_; }
    std::optional<double> plateau() const override { return plateau_; }
    std::optional<double> vanish_radius() const override { return vanish_; }
    Symmetry symmetry() const override;
    std::string name() const override { return name_; }
    const Profile& profile() const { return *h_; }

private:
    int n_;
    ProfilePtr h_;
    std::string name_;
    Vec center_;
    std::optional<double> plateau_;
    std::optional<double> vanish_;
    double lipschitz_;
};

/// Q(z) = c q(z).
class QuadraticModel : public HamiltonianModel {
public:
    QuadraticModel(QuadraticForm q, double c);
    int n() const override { return q_.n(); }
    double value(const Vec& z) const override { return c_ * q_.value(z); }
    Vec gradient(const Vec& z) const override { return c_ * q_.gradient(z); }
    Mat hessian(const Vec& z) const override;
    double grad_lipschitz() const override;
    Symmetry symmetry() const override { return {true, {0}}; }
    std::string name() const override { return "quadratic_Q"; }

private:
    QuadraticForm q_;
    double c_;
};

/// Report of (H1)-(H4) or (HS1)-(HS4) checks on a sample set.
struct AdmissibilityReport {
    struct Item {
        std::string property;
        bool pass = true;
        std::string detail;
        std::optional<Vec> witness;
    };
    std::vector<Item> items;
    bool all_pass() const;
    const Item& get(const std::string& property) const;
    /// Structured text with pass/fail and witness coordinates.
    std::string to_json() const;
};

/// Point samples for the admissibility checks.
struct DomainSampler {
    /// Points in the domain.
    std::vector<Vec> interior;
    /// Points in the boundary collar, where H must equal its plateau.
    std::vector<Vec> collar;
    /// Points of the open set O on which H must vanish.
    std::vector<Vec> vanishing_set;
};

/// Sampler for a ball of radius r: interior uniform in the ball, collar in
/// r_collar < |z| < r, vanishing set in a ball of radius r_vanish about `o_center`.
DomainSampler ball_sampler(int n, double r, double r_collar, double r_vanish, const Vec& o_center, int count,
                           std::mt19937_64& rng);

/// Checks (H1)-(H4); with `s_order` set, checks (HS1)-(HS4) where (HS2)
/// requires the origin in O and (HS4) adds S-invariance.
AdmissibilityReport check_admissible_class(const HamiltonianModel& H, const DomainSampler& sampler,
                                           std::optional<int> s_order = std::nullopt);

/// max over samples of |grad H - central FD| / (1 + |grad H|).
double gradient_fd_error(const HamiltonianModel& H, const std::vector<Vec>& points, double step = 1e-6);

/// Uniform point in the ball of radius r in R^{2n}.
Vec sample_ball(int n, double r, std::mt19937_64& rng);
/// Uniform point on the sphere of radius r.
Vec sample_sphere(int n, double r, std::mt19937_64& rng);

}  // namespace brake
