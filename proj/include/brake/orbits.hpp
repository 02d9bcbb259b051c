#pragma once

// Brake orbits from critical points: residual audit, localization in E_K,
// level-window sweeps and contact-type certificates.

#include "brake/minimax.hpp"

#include "json.hpp"

#include <iosfwd>

namespace brake {

struct OrbitTolerances {
    /// ODE residual bound is ode * (1 + sup |grad H|).
    double ode = 1e-6;
    double symmetry = 1e-10;
    double drift = 1e-8;
    double s_symmetry = 1e-8;
    /// sup |x(t) - x(0)| below this marks the orbit constant.
    double nonconstant = 1e-6;
};

struct OrbitResiduals {
    double ode = 0.0;
    double symmetry = 0.0;
    double energy_drift = 0.0;
    std::optional<double> s_symmetry;
    /// Coefficient relations x_k = i*(a_k) / (2 pi k), i*(a_0) = 0 (loop input only).
    double coefficients = 0.0;
    double grad_sup = 0.0;
    double excursion = 0.0;
};

/// Residuals of a sampled periodic trajectory: samples at t_i = i period / N,
/// velocity by trigonometric differentiation, x(-t_i) read off as sample N - i.
/// With s_order = m > 0, also sup |x(t + period / m) - S x(t)|; needs N % m == 0.
OrbitResiduals sample_residuals(const Mat& samples, double period, const HamiltonianModel& H, int s_order = 0);

struct BrakeOrbit {
    /// Unit-period loop; the trajectory is y(t) = loop(t / tau).
    FourierLoop loop;
    double tau = 1.0;
    double period = 1.0;
    double energy = 0.0;
    /// Integral of 1/2 <-J y', y> over one period.
    double action = 0.0;
    int s_order = 0;
    /// N x 2n samples of y at t_i = i period / N.
    Mat trajectory;
    OrbitResiduals residuals;
    bool constant = false;
    bool verified = false;
    std::string hamiltonian;
    std::string diagnostics;

    double time(int i) const { return period * i / static_cast<double>(trajectory.rows()); }
};

/// Samples the loop as a solution of y' = J grad H(y) with y(t) = x(t / tau),
/// checks the coefficient relations and fills every residual. Never throws on
/// large residuals: the orbit comes back unverified with a diagnostic.
/// num_samples = 0 picks 240 (or more when the loop needs it).
BrakeOrbit loop_to_orbit(const FourierLoop& x, ModelPtr H, int num_samples = 0, int s_order = 0,
                         const OrbitTolerances& tol = {}, double tau = 1.0);

bool passes(const OrbitResiduals& r, const OrbitTolerances& tol, std::string* why = nullptr);

struct Localization {
    bool inside = false;
    double max_q = 0.0;
    double phi = 0.0;
    /// The orbit re-verified against the unextended H; set when inside.
    std::optional<BrakeOrbit> base_orbit;
};

/// q_K(x(t)) < 1 on every sample; when true the loop is re-verified with the base H.
Localization localize_check(const BrakeOrbit& orbit, const ExtendedHamiltonian& Hbar, const OrbitTolerances& tol = {});

/// Window profile on [lo, hi] with u = (s - lo) / (hi - lo): f = 0 below lo,
/// f = plateau above hi. f' climbs to 0.9 pi by u = 0.1, then slowly to
/// 1.1 pi by u = 0.5 (so f' = pi at u = 0.3 with small f''), drops back to 0
/// over [0.9, 1], and a smoothstep on [0.5, 0.9] carries the plateau height.
class WindowProfile : public Profile {
public:
    /// Throws when the plateau is too low for the slope part.
    WindowProfile(double lo, double hi, double plateau);
    double value(double s) const override;
    double d1(double s) const override;
    double d2(double s) const override;

private:
    double lo_, w_, carry_;
};

/// F = f(H).
class ComposedModel : public HamiltonianModel {
public:
    /// `box` bounds the region where f' (H) != 0; used for the sampled Hessian bound.
    ComposedModel(ModelPtr H, ProfilePtr f, double box, std::optional<double> plateau,
                  std::optional<double> vanish, unsigned seed = 1);
    int n() const override { return H_->n(); }
    double value(const Vec& z) const override { return f_->value(H_->value(z)); }
    Vec gradient(const Vec& z) const override;
    Mat hessian(const Vec& z) const override;
    double grad_lipschitz() const override { return M_; }
    std::optional<double> plateau() const override { return plateau_; }
    std::optional<double> vanish_radius() const override { return vanish_; }
    Symmetry symmetry() const override { return H_->symmetry(); }
    std::string name() const override { return "f(" + H_->name() + ")"; }
    const Profile& profile() const { return *f_; }

private:
    ModelPtr H_;
    ProfilePtr f_;
    std::optional<double> plateau_;
    std::optional<double> vanish_;
    double M_ = 0.0;
};

struct SweepOptions {
    int kmax = 16;
    int directions = 8;
    int s_grid = 17;
    /// eps of the quadratic extension.
    double extension_eps = 0.25;
    /// Plateau of f is pi R^2 + extension_eps + margin for the enclosing ball R.
    double plateau_margin = 1.0;
    unsigned seed = 1;
    int threads = 1;
    OrbitTolerances tol;
};

struct SweepEntry {
    double lo = 0.0;
    double hi = 0.0;
    bool found = false;
    double lambda = 0.0;
    double tau = 0.0;
    double critical_value = 0.0;
    bool localized = false;
    /// Orbit of X_F with period 1, before rescaling.
    BrakeOrbit window_orbit;
    /// Rescaled brake orbit of X_H.
    BrakeOrbit orbit;
    std::string status;
};

/// f = 0 for H <= lo, rising to a plateau at H >= hi. Runs the minimax
/// pipeline for f(H), localizes, and rescales the orbit by tau = f'(lambda).
/// Fails (found = false, status set) instead of throwing.
SweepEntry window_orbit(ModelPtr H, double lo, double hi, int s_order, const SweepOptions& opt);

/// Windows (level - eps, level) for each eps, in the given order.
std::vector<SweepEntry> energy_sweep(ModelPtr H, double level, const std::vector<double>& eps_list,
                                     const SweepOptions& opt);

/// Windows (M, M + eps) in the loop space restricted to modes j = 1 (mod m).
std::vector<SweepEntry> s_symmetric_sweep(ModelPtr H, int m, double M, const std::vector<double>& eps_list,
                                          const SweepOptions& opt);

struct ContactCertificate {
    double level = 0.0;
    bool valid = false;
    /// "alpha_eps", "liouville" or "none".
    std::string method = "none";
    double eps = 0.0;
    /// Sampled max of alpha_eps(X_H) over the level set for the chosen eps.
    double max_alpha = 0.0;
    double margin = 0.0;
    /// min <z, grad H> / (|z| |grad H|) over the samples; > 0 means star-shaped.
    double star_margin = 0.0;
    bool star_shaped = false;
    int samples = 0;
    double min_grad = 0.0;
    std::string detail;
};

struct ContactOptions {
    int samples = 10000;
    double eps_min = 1e-6;
    double eps_max = 1.0;
    int eps_points = 25;
    unsigned seed = 1;
    /// Half-width of the sampling box; 0 finds one.
    double box = 0.0;
};

/// alpha_eps = -x dy + eps dF with F(x, y) = <x, d_y H(0, y)>.
double alpha_eps_on_field(const HamiltonianModel& H, const Vec& z, double eps);

/// Throws Error with a witness when H is not N0-invariant, <d_x H, x> <= 0
/// somewhere with x != 0, c >= sup_y H(0, y) on the samples, or the level is degenerate.
ContactCertificate contact_certify(const HamiltonianModel& H, double level, const ContactOptions& opt = {});

/// Points of H = level from Newton projection of box samples.
std::vector<Vec> sample_level_set(const HamiltonianModel& H, double level, double box, int count, unsigned seed);

void write_orbit_csv(std::ostream& os, const BrakeOrbit& orbit);
/// Samples back from write_orbit_csv: period from the time column spacing.
Mat read_orbit_csv(std::istream& is, double* period = nullptr);
nlohmann::json orbit_metadata(const BrakeOrbit& orbit);
nlohmann::json to_json(const OrbitResiduals& r);
std::string to_text(const ContactCertificate& c);

}  // namespace brake
