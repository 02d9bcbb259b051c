#include "brake/action.hpp"

#include <ostream>

namespace brake {

double action_a(const FourierLoop& x) {
    double a = 0.0;
    for (int k = 1; k <= x.kmax(); ++k)
        a += kPi * k * (x.mode(k).squaredNorm() - x.mode(-k).squaredNorm());
    return a;
}

ActionFunctional::ActionFunctional(ModelPtr H, int kmax, int num_samples)
    : H_(std::move(H)), grid_(kmax, num_samples > 0 ? num_samples : default_samples(kmax)) {
    if (grid_.num_samples() < default_samples(kmax))
        throw Error("action quadrature needs at least 4 kmax + 1 samples, got " +
                    std::to_string(grid_.num_samples()));
}

void ActionFunctional::check(const FourierLoop& x) const {
    if (x.kmax() != grid_.kmax() || x.n() != H_->n()) throw Error("loop shape does not match the action grid");
}

double ActionFunctional::b(const FourierLoop& x) const {
    check(x);
    const Mat S = grid_.evaluate(x);
    double sum = 0.0;
    for (int i = 0; i < S.rows(); ++i) sum += H_->value(S.row(i).transpose());
    return sum / S.rows();
}

FourierLoop ActionFunctional::grad_b(const FourierLoop& x) const {
    check(x);
    const Mat S = grid_.evaluate(x);
    Mat G(S.rows(), S.cols());
    for (int i = 0; i < S.rows(); ++i) G.row(i) = H_->gradient(S.row(i).transpose()).transpose();
    Mat c = grid_.transform_L0(G);
    for (int k = -x.kmax(); k <= x.kmax(); ++k)
        if (k != 0) c.row(k + x.kmax()) /= kTwoPi * std::abs(k);
    return FourierLoop(x.n(), x.kmax(), c);
}

ActionEvaluation ActionFunctional::evaluate(const FourierLoop& x) const {
    check(x);
    const Mat S = grid_.evaluate(x);
    Mat G(S.rows(), S.cols());
    double sum = 0.0;
    for (int i = 0; i < S.rows(); ++i) {
        const Vec z = S.row(i).transpose();
        sum += H_->value(z);
        G.row(i) = H_->gradient(z).transpose();
    }
    Mat c = grid_.transform_L0(G);
    for (int k = -x.kmax(); k <= x.kmax(); ++k)
        if (k != 0) c.row(k + x.kmax()) /= kTwoPi * std::abs(k);
    const FourierLoop gb(x.n(), x.kmax(), c);

    ActionEvaluation e;
    e.a = action_a(x);
    e.b = sum / S.rows();
    e.phi = e.a - e.b;
    e.grad = project(x, Sector::plus) - project(x, Sector::minus) - gb;
    e.grad_norm = norm(e.grad);
    return e;
}

double ActionFunctional::symplectic_form(const FourierLoop& x) const {
    check(x);
    const Mat S = grid_.evaluate(x);
    const Mat V = grid_.velocity(x);
    double sum = 0.0;
    for (int i = 0; i < S.rows(); ++i) {
        const Vec z = S.row(i).transpose();
        sum += 0.5 * (-apply_J(V.row(i).transpose())).dot(z) - H_->value(z);
    }
    return sum / S.rows();
}

double action_b(const FourierLoop& x, ModelPtr H, int num_samples) {
    return ActionFunctional(std::move(H), x.kmax(), num_samples).b(x);
}

ActionEvaluation phi_and_grad(const FourierLoop& x, ModelPtr H, int num_samples) {
    return ActionFunctional(std::move(H), x.kmax(), num_samples).evaluate(x);
}

double symplectic_action_form(const FourierLoop& x, ModelPtr H, int num_samples) {
    return ActionFunctional(std::move(H), x.kmax(), num_samples).symplectic_form(x);
}

void write_action_csv_header(std::ostream& os) { os << "a,b,phi,grad_norm\n"; }

void write_action_csv_row(std::ostream& os, const ActionEvaluation& e) {
    os << format_double(e.a) << ',' << format_double(e.b) << ',' << format_double(e.phi) << ','
       << format_double(e.grad_norm) << '\n';
}

}  // namespace brake
