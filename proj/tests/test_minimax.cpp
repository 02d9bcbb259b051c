#include "doctest.h"

#include "brake/minimax.hpp"

#include <sstream>

using namespace brake;

namespace {

ExtendedPtr extended_bump(int n, double m = kPi + 0.5, double r0 = 0.2) {
    return extend(builtin("radial_bump", n, {{"m", m}, {"r0", r0}}), QuadraticForm(n, 1.0), 0.25);
}

FourierLoop random_loop(int n, int kmax, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat c(2 * kmax + 1, n);
    for (int i = 0; i < c.rows(); ++i) {
        const int k = i - kmax;
        for (int j = 0; j < n; ++j) c(i, j) = scale * g(rng) / (1.0 + k * k);
    }
    return FourierLoop(n, kmax, c);
}

// Classical RK4 on x' = -grad Phi(x) in coefficient space.
FourierLoop rk4_reference(const FourierLoop& x0, double T, int steps, const RestrictedFunctional& F) {
    const double h = T / steps;
    auto f = [&](const FourierLoop& x) { return -1.0 * F.evaluate(x).grad; };
    FourierLoop x = x0;
    for (int i = 0; i < steps; ++i) {
        const FourierLoop k1 = f(x);
        const FourierLoop k2 = f(x + (0.5 * h) * k1);
        const FourierLoop k3 = f(x + (0.5 * h) * k2);
        const FourierLoop k4 = f(x + h * k3);
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

// Circle orbit of H = h(|z|^2) with h = m smoothstep((S - S0) / (S1 - S0)):
// radius^2 solves h'(S) = pi on the rising (convex) half of the ramp.
double circle_radius_sq(double m, double S0, double S1) {
    auto hp = [&](double S) { return m * smoothstep_d1((S - S0) / (S1 - S0)) / (S1 - S0); };
    double lo = S0, hi = S0 + 0.5 * (S1 - S0);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (hp(mid) < kPi ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("linear flow is exact when grad b vanishes") {
    const ModelPtr zero = builtin("radial_bump", 1, {{"r0", 50.0}, {"r1", 60.0}});
    const RestrictedFunctional F(zero, 4);
    Vec e(2);
    e << 0, 1;
    const FourierLoop x = make_loop(1, 4, {{1, e}, {-1, 2 * e}, {0, 3 * e}});
    const double dt = 0.037;
    const FourierLoop y = flow_step(x, dt, F);
    CHECK(y.mode(1)(0) == doctest::Approx(std::exp(-dt)).epsilon(1e-15));
    CHECK(y.mode(-1)(0) == doctest::Approx(2 * std::exp(dt)).epsilon(1e-15));
    CHECK(y.mode(0)(0) == 3.0);
}

TEST_CASE("flow integrator order and reference agreement") {
    std::mt19937_64 rng(2);
    const RestrictedFunctional F(extended_bump(1), 8);
    const FourierLoop x = random_loop(1, 8, 0.12, rng);
    REQUIRE(norm(F.action().grad_b(x)) > 1e-3);
    std::vector<double> err;
    for (double dt : {0.1, 0.05, 0.025, 0.0125}) err.push_back(norm(flow_fixed(x, 1.0, dt, F) - flow_fixed(x, 1.0, dt / 2, F)));
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
        const double order = std::log2(err[i] / err[i + 1]);
        CAPTURE(order);
        CHECK(order >= 1.9);
    }

    for (int trial = 0; trial < 5; ++trial) {
        // starts whose flow stays where the extended bump is smooth
        FourierLoop x0 = random_loop(1, 8, 0.12, rng);
        while (norm(x0) > 0.35) x0 = random_loop(1, 8, 0.12, rng);
        const FourierLoop ref = rk4_reference(x0, 1.0, 2000, F);
        const FourierLoop etd = flow_fixed(x0, 1.0, 2.5e-4, F);
        CAPTURE(norm(F.action().grad_b(x0)));
        CHECK(norm(ref - etd) < 1e-6);
    }
}

TEST_CASE("adaptive flow never increases Phi") {
    std::mt19937_64 rng(3);
    const RestrictedFunctional F(extended_bump(1), 8);
    FlowControls c;
    for (int trial = 0; trial < 5; ++trial) {
        FlowState s = start_flow(random_loop(1, 8, 0.6, rng), F, c);
        double last = s.eval.phi;
        for (double T = 0.25; T <= 3.0; T += 0.25) {
            advance_flow(s, T, F, c);
            CHECK(s.eval.phi <= last + 1e-12 * (1 + std::abs(last)));
            last = s.eval.phi;
        }
        CHECK(s.monotone);
    }
}

TEST_CASE("linking geometry") {
    const ExtendedPtr Hb = extended_bump(1);
    const int K = 16;
    const TauEstimate te = estimate_tau_star(*Hb, K);
    const AlphaBeta ab = estimate_alpha_beta(*Hb, K);
    CHECK(te.sampled_max <= 1e-9);
    CHECK(ab.beta > 0.0);
    CHECK(ab.sampled_min >= ab.beta - 1e-9);
    CHECK(te.tau > ab.alpha);

    const RestrictedFunctional F(Hb, K);
    std::mt19937_64 rng(5);
    CHECK(sample_boundary_max(F, te.tau, 300, rng) <= 1e-9);
    CHECK(sample_gamma_min(F, ab.alpha, 200, rng) >= ab.beta - 1e-9);
    for (double f : {2.0, 4.0}) CHECK(sample_boundary_max(F, f * te.tau, 150, rng) <= 1e-9);
    // Phi <= 0 on X- + X0 for every radius
    for (int i = 0; i < 50; ++i) {
        const FourierLoop v = project(random_loop(1, K, 3.0, rng), Sector::minus) +
                              project(random_loop(1, K, 3.0, rng), Sector::zero);
        CHECK(F.evaluate(v).phi <= 0.0);
    }
}

TEST_CASE("vanishing neighbourhood gives beta = alpha^2 / 2") {
    const int K = 16;
    double last = std::numeric_limits<double>::infinity();
    for (double r0 : {0.3, 0.15, 0.075}) {
        const ExtendedPtr Hb = extended_bump(1, kPi + 0.5, r0);
        const AlphaBeta ab = estimate_alpha_beta(*Hb, K);
        CHECK(ab.beta < last);
        last = ab.beta;
        const RestrictedFunctional F(Hb, K);
        const double a_small = 0.99 * r0 / ab.embedding;
        std::mt19937_64 rng(9);
        for (int i = 0; i < 20; ++i) {
            FourierLoop d = project(random_loop(1, K, 1.0, rng), Sector::plus);
            d = (a_small / norm(d)) * d;
            CHECK(F.action().b(d) == 0.0);
            CHECK(F.evaluate(d).phi == doctest::Approx(0.5 * a_small * a_small));
        }
    }
}

TEST_CASE("minimax finds the circle orbit of the radial bump") {
    const double m = kPi + 0.5;
    const ExtendedPtr Hb = extended_bump(1, m);
    MinimaxProblem p = make_problem(Hb, 16);
    p.directions = 4;
    p.s_grid = 17;
    const MinimaxResult r = minimax_search(p);
    REQUIRE(r.converged);
    CHECK(r.eval.grad_norm < 1e-6);
    CHECK(r.c_value >= p.beta);
    CHECK(r.monotone);
    CHECK(std::isfinite(r.max_norm));

    const double S = circle_radius_sq(m, 0.04, 0.81);
    CHECK(std::abs(r.x.mode(1)(0)) == doctest::Approx(std::sqrt(S)).epsilon(1e-8));
    CHECK(r.c_value == doctest::Approx(kPi * S - m * smoothstep((S - 0.04) / 0.77)).epsilon(1e-8));

    std::ostringstream os;
    r.trace.write_csv(os);
    CHECK(os.str().rfind("time,sup_phi,argmax_grad_norm\n", 0) == 0);
    CHECK(r.trace.rows.size() >= 1);
}

TEST_CASE("refine_critical contract") {
    const double m = kPi + 0.5;
    const RestrictedFunctional F(extended_bump(1, m), 8);
    const double S = circle_radius_sq(m, 0.04, 0.81);
    Vec e(2);
    e << 0, std::sqrt(S);
    const FourierLoop exact = make_loop(1, 8, {{1, e}});
    REQUIRE(F.evaluate(exact).grad_norm < 1e-10);

    const RefineResult same = refine_critical(exact, F, 1e-9);
    CHECK(same.converged);
    CHECK(same.iterations == 0);
    CHECK(same.x.coeffs() == exact.coeffs());

    std::mt19937_64 rng(12);
    const FourierLoop near = exact + 1e-3 * random_loop(1, 8, 1.0, rng);
    const RefineResult r = refine_critical(near, F, 1e-10);
    CHECK(r.converged);
    CHECK(r.eval.grad_norm < 1e-10);
    CHECK(norm(r.x - exact) < 1e-8);

    const RefineResult far = refine_critical(random_loop(1, 8, 3.0, rng), F, 1e-10, 2);
    CHECK_FALSE(far.converged);
    CHECK_FALSE(far.status.empty());
}
