#pragma once

// Negative gradient flow of Phi, the linking sets Omega_tau and Gamma_alpha,
// and the minimax search for a positive critical value.

#include "brake/action.hpp"
#include "brake/extension.hpp"

#include <iosfwd>
#include <vector>

namespace brake {

/// Functional restricted to a mode subspace: every mode when s_order == 0,
/// otherwise the modes j = 1 (mod s_order).
class RestrictedFunctional {
public:
    RestrictedFunctional(ModelPtr H, int kmax, int num_samples = 0, int s_order = 0);

    const ActionFunctional& action() const { return A_; }
    int s_order() const { return m_; }
    int n() const { return A_.hamiltonian().n(); }
    int kmax() const { return A_.kmax(); }
    bool active(int k) const;
    /// Zeroes the modes outside the subspace.
    FourierLoop restrict(const FourierLoop& x) const;
    /// Phi and its gradient inside the subspace.
    ActionEvaluation evaluate(const FourierLoop& x) const;

private:
    ActionFunctional A_;
    int m_;
};

/// x' = -grad Phi written as x' = L x + grad b(x) with L = -1 on X+, +1 on X-
/// and 0 on X0. One exponential time-differencing RK2 step (Cox-Matthews):
/// the linear part is exact mode by mode and grad b enters through phi_1, phi_2.
FourierLoop flow_step(const FourierLoop& x, double dt, const RestrictedFunctional& F);

/// Fixed-step flow up to time T.
FourierLoop flow_fixed(const FourierLoop& x, double T, double dt, const RestrictedFunctional& F);

struct FlowControls {
    double dt = 1e-2;
    double dt_min = 1e-7;
    double dt_max = 0.2;
    double epoch = 0.5;
    double max_time = 12.0;
    double grad_tol = 1e-8;
    /// Relative change of the running sup over one unit of flow time.
    double sup_tol = 1e-8;
    /// Gradient norm below which a local polish is attempted.
    double coarse_grad = 5e-2;
};

/// Flow state of one sample, advanced adaptively: a step is retried with
/// dt / 2 whenever Phi would increase, and dt grows by 1.25 after success.
struct FlowState {
    FourierLoop x;
    ActionEvaluation eval;
    double time = 0.0;
    double dt = 1e-2;
    double max_norm = 0.0;
    bool monotone = true;
};

FlowState start_flow(const FourierLoop& x, const RestrictedFunctional& F, const FlowControls& c);
void advance_flow(FlowState& s, double t_end, const RestrictedFunctional& F, const FlowControls& c);

/// Omega_tau, Gamma_alpha and the distinguished mode e+.
struct MinimaxProblem {
    ExtendedPtr Hbar;
    int kmax = 16;
    int num_samples = 0;
    int s_order = 0;
    double tau = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    FlowControls flow;
    int directions = 64;
    int s_grid = 33;
    int max_refinements = 400;
    int refinements_per_epoch = 40;
    unsigned seed = 1;
    int threads = 1;

    /// Throws unless tau > alpha > 0 and beta > 0.
    void validate() const;
};

/// e+(t) = e^{2 pi J t} e_1 with e_1 the first basis vector of L0.
FourierLoop e_plus(int n, int kmax);

struct TauEstimate {
    double tau = 0.0;
    double bound = 0.0;
    double sampled_max = 0.0;
    int doublings = 0;
};

/// tau* from Phi <= gamma - (eps / rho^2) s^2 - min(1/2, c w_min) |x- + x0|^2
/// on the cylinder, then checked on a sampled boundary of Omega_tau and
/// doubled until the check passes. Throws after `max_doublings`.
TauEstimate estimate_tau_star(const ExtendedHamiltonian& Hbar, int kmax, int s_order = 0, unsigned seed = 1,
                              int samples = 300, int max_doublings = 6);

/// Largest sampled Phi on the boundary of Omega_tau.
double sample_boundary_max(const RestrictedFunctional& F, double tau, int samples, std::mt19937_64& rng);
/// Smallest sampled Phi on Gamma_alpha.
double sample_gamma_min(const RestrictedFunctional& F, double alpha, int samples, std::mt19937_64& rng);

struct AlphaBeta {
    double alpha = 0.0;
    double beta = 0.0;
    /// sup_t |x(t)| <= embedding * |x|_{1/2} on the truncated X+.
    double embedding = 0.0;
    double cubic = 0.0;
    double sampled_min = 0.0;
    std::string method;
};

/// Throws when no positive beta is found.
AlphaBeta estimate_alpha_beta(const ExtendedHamiltonian& Hbar, int kmax, int s_order = 0, unsigned seed = 1,
                              int samples = 200);

/// Builds the problem with tau, alpha, beta filled in.
MinimaxProblem make_problem(ExtendedPtr Hbar, int kmax, int s_order = 0, unsigned seed = 1);

struct TraceRow {
    double time = 0.0;
    double sup_phi = 0.0;
    double argmax_grad_norm = 0.0;
    int snapshot = -1;
};

struct FlowTrace {
    std::vector<TraceRow> rows;
    std::vector<FourierLoop> snapshots;
    FourierLoop terminal;

    void write_csv(std::ostream& os) const;
};

struct RefineResult {
    FourierLoop x;
    ActionEvaluation eval;
    bool converged = false;
    int iterations = 0;
    std::string status;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) on grad Phi = 0 with a
/// finite-difference Jacobian; reports a stall instead of returning silently.
RefineResult refine_critical(const FourierLoop& x0, const RestrictedFunctional& F, double grad_tol,
                             int max_iterations = 60);

struct MinimaxResult {
    FourierLoop x;
    ActionEvaluation eval;
    double c_value = 0.0;
    bool converged = false;
    std::string status;
    FlowTrace trace;
    /// sup of |x|_{1/2} over all traced samples.
    double max_norm = 0.0;
    bool monotone = true;
    int refinements = 0;
    int samples = 0;
};

/// Flows the sampled Omega_tau, tracks the running sup of Phi, refines the
/// sampling near the maximiser and polishes the maximiser with
/// refine_critical. `converged` is set iff the polish reaches grad_tol with
/// Phi >= beta - 1e-9.
MinimaxResult minimax_search(const MinimaxProblem& problem);

}  // namespace brake
