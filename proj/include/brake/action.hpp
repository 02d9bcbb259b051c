#pragma once

// Dual action functional Phi(x) = a(x) - b(x) on the truncated loop space.

#include "brake/hamiltonian.hpp"
#include "brake/loop_space.hpp"

#include <iosfwd>

namespace brake {

struct ActionEvaluation {
    double a = 0.0;
    double b = 0.0;
    double phi = 0.0;
    FourierLoop grad;
    double grad_norm = 0.0;
};

/// a(x) = 1/2 |x+|^2 - 1/2 |x-|^2 in the 1/2-norm.
double action_a(const FourierLoop& x);

/// Evaluator bound to one Hamiltonian and one sample grid.
class ActionFunctional {
public:
    /// Throws when num_samples < 4 kmax + 1.
    ActionFunctional(ModelPtr H, int kmax, int num_samples = 0);

    const HamiltonianModel& hamiltonian() const { return *H_; }
    ModelPtr hamiltonian_ptr() const { return H_; }
    int kmax() const { return grid_.kmax(); }
    int num_samples() const { return grid_.num_samples(); }
    const SpectralGrid& grid() const { return grid_; }

    double b(const FourierLoop& x) const;
    double phi(const FourierLoop& x) const { return action_a(x) - b(x); }
    /// j* applied to the transform of grad H along x.
    FourierLoop grad_b(const FourierLoop& x) const;
    ActionEvaluation evaluate(const FourierLoop& x) const;
    /// Integral of 1/2 <-J x', x> - H(x) over one period.
    double symplectic_form(const FourierLoop& x) const;

private:
    void check(const FourierLoop& x) const;
    ModelPtr H_;
    SpectralGrid grid_;
};

double action_b(const FourierLoop& x, ModelPtr H, int num_samples);
ActionEvaluation phi_and_grad(const FourierLoop& x, ModelPtr H, int num_samples);
double symplectic_action_form(const FourierLoop& x, ModelPtr H, int num_samples);

/// Diagnostic rows "a,b,phi,grad_norm".
void write_action_csv_header(std::ostream& os);
void write_action_csv_row(std::ostream& os, const ActionEvaluation& e);

}  // namespace brake
