#pragma once

// Reference values and numerical probes for the symmetric capacities:
// exact values, onset brackets from one admissible family, monotonicity
// audits and the torus embedding.

#include "brake/orbits.hpp"

namespace brake {

enum class DomainKind { ball, cylinder, ellipsoid, torus_product };
enum class DomainSymmetry { N0, N1, N0S };

struct DomainSpec {
    DomainKind kind = DomainKind::ball;
    int n = 1;
    /// Radius for ball / cylinder / ellipsoid, a for the torus product.
    double r = 1.0;
    /// Ellipsoid axis ratio: q = (|z_1|^2 + K^{-2} sum_{j >= 2} |z_j|^2) / r^2.
    double K = 1.0;
    DomainSymmetry symmetry = DomainSymmetry::N0;
    int m = 0;

    /// "ball(1)", "Z(0.5)", "E(1,K=4)", "torus(1,n=2)".
    std::string label() const;
    /// Membership in R^{2n}; for the torus product z = (theta, r).
    bool contains(const Vec& z) const;
    Vec apply_symmetry(const Vec& z) const;
};

/// "ball", "cylinder", "ellipsoid" or "torus"; throws otherwise.
DomainKind parse_domain_kind(const std::string& s);
DomainSymmetry parse_domain_symmetry(const std::string& s);

/// z in U iff sigma(z) in U on box samples (for N0S both N0 and S are
/// checked); a failing point goes to `witness`.
bool symmetric_membership(const DomainSpec& d, int samples, unsigned seed, Vec* witness = nullptr);

struct ReferenceValue {
    double value = 0.0;
    /// True when only an upper bound is known.
    bool upper_bound = false;
    std::string source;
};

/// pi r^2 for ball(r), Z(r) and the ellipsoid with smallest radius r;
/// the bound 5 a pi for torus products.
std::optional<ReferenceValue> reference_value(const DomainSpec& d);

/// Plateau family H = h(q(z)) adapted to the domain: h = 0 for q <= q0 and
/// h = m for q >= q1, with a nearly constant slope m / (q1 - q0) / (1 - theta)
/// in between. Its flow is integrable: plane j turns at 2 w_j h'(q), so it has
/// a nonconstant orbit of period <= 1 iff max_j w_j max h' >= pi.
class PlateauFamily {
public:
    static constexpr double q0 = 0.0025;
    static constexpr double q1 = 0.985;
    static constexpr double theta = 0.05;

    /// Throws for torus products.
    explicit PlateauFamily(const DomainSpec& d);
    const QuadraticForm& form() const { return q_; }
    ModelPtr member(double m) const;
    /// max_j w_j sup h'_m / pi; below 1 certifies that no fast orbit exists.
    double fast_ratio(double m) const;

private:
    DomainSpec d_;
    QuadraticForm q_;
};

enum class LevelOutcome { orbit, none, inconclusive };
std::string to_string(LevelOutcome o);

struct LevelRecord {
    double m = 0.0;
    LevelOutcome outcome = LevelOutcome::inconclusive;
    double fast_ratio = 0.0;
    /// Minimal-period bound of the witnessed orbit (1 for the unit loop).
    double period = 0.0;
    double critical_value = 0.0;
    std::string detail;
};

struct CapacityEstimate {
    DomainSpec domain;
    std::optional<double> lower;
    std::optional<double> upper;
    std::optional<ReferenceValue> reference;
    /// Inconclusive levels inside the bracket.
    std::vector<double> gaps;
    std::vector<LevelRecord> levels;
    std::string family = "plateau";
    unsigned seed = 1;
    std::string status;

    bool ordered() const { return !lower || !upper || *lower <= *upper; }
};

struct OnsetOptions {
    /// Starting levels; empty means reference * {0.7, 1.3}.
    std::vector<double> grid;
    /// Stop when the bracket is narrower; 0 means 0.1 * reference (or of the initial bracket).
    double width = 0.0;
    int max_rounds = 8;
    int kmax = 12;
    int directions = 4;
    int s_grid = 17;
    unsigned seed = 1;
    int threads = 1;
    OrbitTolerances tol;
};

/// One level of the family: the minimax pipeline where the extension applies
/// (m > pi r^2), the integrable-orbit certificate otherwise.
LevelRecord probe_level(const PlateauFamily& family, const DomainSpec& d, double m, const OnsetOptions& opt);

/// Bracket for the capacity from the levels of one family: lower = largest
/// level with no fast orbit, upper = smallest level with a witnessed one.
/// Bisects while the bracket is wider than opt.width, stepping around gaps.
CapacityEstimate onset_probe(const DomainSpec& d, const OnsetOptions& opt = {});

/// Phi(theta, r) = ((3a - 2r)^{1/2} cos theta, (3a - 2r)^{1/2} sin theta) per
/// factor, onto the annulus a < x^2 + y^2 < 5a. Points are (theta_1..theta_n,
/// r_1..r_n) and images (x_1..x_n, y_1..y_n).
class TorusEmbedding {
public:
    TorusEmbedding(double a, int n);
    double a() const { return a_; }
    int n() const { return n_; }
    Vec map(const Vec& p) const;
    /// (theta, r) -> (-theta, r).
    Vec torus_involution(const Vec& p) const;
    /// Random point of T^n x (-a, a)^n.
    Vec sample(std::mt19937_64& rng) const;

    /// max |D^T W D - W| with W the matrix of sum dy_j ^ dx_j (and of
    /// sum dr_j ^ dtheta_j on the source), D by fourth-order differences.
    double pullback_residual(int samples, unsigned seed) const;
    /// max |Phi(phi(p)) - N1 Phi(p)|.
    double equivariance_residual(int samples, unsigned seed) const;
    /// All sampled images satisfy a < x_j^2 + y_j^2 < 5a.
    bool image_in_annuli(int samples, unsigned seed) const;
    /// Every sampled image lies in the domain.
    bool image_in(const DomainSpec& d, int samples, unsigned seed) const;

private:
    double a_;
    int n_;
};

TorusEmbedding torus_embedding(double a, int n);

struct AuditReport {
    std::string inner;
    std::string outer;
    std::string embedding;
    bool embedding_ok = false;
    bool holds = false;
    double inner_lower = 0.0;
    double outer_upper = 0.0;
    std::string detail;
};

/// Identity inclusion: every sampled point of `inner` lies in `outer` and the
/// symmetries agree. Checks lower(inner) <= upper(outer); uses the reference
/// value where the estimate lacks an endpoint.
AuditReport monotonicity_audit(const CapacityEstimate& inner, const CapacityEstimate& outer, int samples = 2000,
                               unsigned seed = 1);
/// The torus product through Phi into `outer` (a ball for n = 1, a cylinder otherwise).
AuditReport monotonicity_audit(const CapacityEstimate& torus, const CapacityEstimate& outer,
                               const TorusEmbedding& phi, int samples = 2000, unsigned seed = 1);

nlohmann::json to_json(const DomainSpec& d);
nlohmann::json to_json(const CapacityEstimate& e);
nlohmann::json to_json(const AuditReport& a);
DomainSpec domain_from_json(const nlohmann::json& j);
/// Inverse of to_json(CapacityEstimate); throws Error on malformed records.
CapacityEstimate estimate_from_json(const nlohmann::json& j);
/// Table of domain / reference / bracket / margin.
std::string render_report(const std::vector<CapacityEstimate>& estimates);

}  // namespace brake
