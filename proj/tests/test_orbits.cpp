#include "doctest.h"

#include "brake/orbits.hpp"

#include <sstream>

using namespace brake;

namespace {

ModelPtr radial(double a) { return builtin("s_symmetric_radial", 1, {{"a", a}}); }

FourierLoop circle(int kmax, double r, int mode = 1) {
    Vec e(2);
    e << 0, r;
    return make_loop(1, kmax, {{mode, e}});
}

// (0, r) rotated by 2 pi w t, sampled directly.
Mat circle_samples(int N, double r, double w) {
    Mat S(N, 2);
    for (int i = 0; i < N; ++i) {
        const double th = 2.0 * kPi * w * i / N;
        S(i, 0) = -r * std::sin(th);
        S(i, 1) = r * std::cos(th);
    }
    return S;
}

}  // namespace

TEST_CASE("sampled residuals of a closed-form circle") {
    const ModelPtr H = radial(kPi);
    for (int N : {60, 240}) {
        const OrbitResiduals r = sample_residuals(circle_samples(N, 0.7, 1.0), 1.0, *H, 3);
        CHECK(r.ode < 1e-10);
        CHECK(r.symmetry < 1e-14);
        CHECK(r.energy_drift < 1e-14);
        CHECK(*r.s_symmetry < 1e-14);
        CHECK(r.excursion == doctest::Approx(1.4));
    }
    // wrong speed is caught
    CHECK(sample_residuals(circle_samples(60, 0.7, 2.0), 1.0, *H).ode > 1.0);
    CHECK_THROWS_AS(sample_residuals(circle_samples(60, 0.7, 1.0), 1.0, *H, 7), Error);
}

TEST_CASE("loop_to_orbit on the exact circle of H = pi |z|^2") {
    const BrakeOrbit o = loop_to_orbit(circle(8, 0.6), radial(kPi));
    CHECK(o.verified);
    CHECK_FALSE(o.constant);
    CHECK(o.residuals.ode < 1e-10);
    CHECK(o.residuals.coefficients < 1e-12);
    CHECK(o.residuals.symmetry <= 1e-10);
    CHECK(o.residuals.energy_drift < 1e-8);
    CHECK(o.period == 1.0);
    CHECK(o.energy == doctest::Approx(kPi * 0.36));
    CHECK(o.action == doctest::Approx(kPi * 0.36));
    CHECK(o.trajectory.rows() == 240);
}

TEST_CASE("loop_to_orbit flags constant loops and rejects non-critical loops") {
    const BrakeOrbit c = loop_to_orbit(FourierLoop(1, 8), radial(kPi));
    CHECK(c.verified);
    CHECK(c.constant);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    Mat m(17, 1);
    for (int i = 0; i < 17; ++i) m(i, 0) = g(rng) / (1.0 + (i - 8) * (i - 8));
    const BrakeOrbit bad = loop_to_orbit(FourierLoop(1, 8, m), radial(kPi));
    CHECK_FALSE(bad.verified);
    CHECK(bad.residuals.ode > 1e-2);
    CHECK_FALSE(bad.diagnostics.empty());
    // the brake symmetry is structural for loops in the L0-constrained space
    CHECK(bad.residuals.symmetry <= 1e-10);
}

TEST_CASE("time rescaling follows the chain rule") {
    // y(t) = x(t / tau) for the unit circle solves y' = (2 pi / tau) J y, i.e. H = (pi / tau) |z|^2
    for (double tau : {2.0, -2.0, 0.5}) {
        const BrakeOrbit o = loop_to_orbit(circle(6, 0.8), radial(kPi / tau), 0, 0, {}, tau);
        CAPTURE(tau);
        CHECK(o.verified);
        CHECK(o.period == std::abs(tau));
        CHECK(o.residuals.ode < 1e-10);
        CHECK(o.action == doctest::Approx((tau > 0 ? 1 : -1) * kPi * 0.64));
        CHECK(o.time(1) == doctest::Approx(std::abs(tau) / 240));
    }
    CHECK_FALSE(loop_to_orbit(circle(6, 0.8), radial(kPi), 0, 0, {}, 2.0).verified);
    CHECK_THROWS_AS(loop_to_orbit(circle(6, 0.8), radial(kPi), 0, 0, {}, 0.0), Error);
}

TEST_CASE("localize_check") {
    const double m = kPi + 0.5;
    const ExtendedPtr Hb = extend(builtin("radial_bump", 1, {{"m", m}}), QuadraticForm(1, 1.0), 0.25);
    MinimaxProblem p = make_problem(Hb, 16);
    p.directions = 4;
    p.s_grid = 17;
    const MinimaxResult r = minimax_search(p);
    REQUIRE(r.converged);
    const BrakeOrbit bar = loop_to_orbit(r.x, Hb);
    CHECK(bar.verified);
    const Localization L = localize_check(bar, *Hb);
    CHECK(L.inside);
    CHECK(L.phi > 0.0);
    CHECK(L.phi == doctest::Approx(r.c_value).epsilon(1e-9));
    REQUIRE(L.base_orbit);
    CHECK(L.base_orbit->verified);
    CHECK(L.base_orbit->residuals.ode == doctest::Approx(bar.residuals.ode).epsilon(1e-9));
    CHECK(L.base_orbit->energy == doctest::Approx(bar.energy).epsilon(1e-12));

    const Localization out = localize_check(loop_to_orbit(circle(16, 3.0), Hb), *Hb);
    CHECK_FALSE(out.inside);
    CHECK(out.max_q > 1.0);
    CHECK_FALSE(out.base_orbit);
}

TEST_CASE("energy sweep on the unit sphere") {
    const ModelPtr H = radial(1.0);
    SweepOptions opt;
    opt.directions = 4;
    const std::vector<SweepEntry> es = energy_sweep(H, 1.0, {0.1, 0.05}, opt);
    REQUIRE(es.size() == 2);
    for (const SweepEntry& e : es) {
        CAPTURE(e.status);
        REQUIRE(e.found);
        CHECK(std::abs(e.lambda - 1.0) < e.hi - e.lo);
        CHECK(e.lambda > e.lo);
        CHECK(e.localized);
        CHECK(e.tau != 0.0);
        // circles of f(|z|^2) with period 1 need f'(lambda) = pi
        CHECK(e.tau == doctest::Approx(kPi).epsilon(1e-7));
        CHECK(e.orbit.verified);
        CHECK(e.orbit.period == doctest::Approx(kPi).epsilon(1e-7));
        CHECK(std::abs(e.orbit.action - kPi * e.lambda) < 1e-3);
        CHECK(e.orbit.energy == doctest::Approx(e.lambda));
        CHECK(e.window_orbit.verified);
    }
    CHECK(1.0 - es[1].lambda < 0.05);
}

TEST_CASE("sweep reports a window that cannot contain a ball around 0") {
    SweepOptions opt;
    const SweepEntry e = window_orbit(radial(1.0), -0.5, 1.0, 0, opt);
    CHECK_FALSE(e.found);
    CHECK(e.status.find("ball around 0") != std::string::npos);
}

TEST_CASE("S-symmetric sweep keeps only modes j = 1 mod m") {
    const ModelPtr H = radial(1.0);
    SweepOptions opt;
    opt.directions = 4;
    for (int m : {2, 3}) {
        const std::vector<SweepEntry> es = s_symmetric_sweep(H, m, 0.5, {0.2}, opt);
        const SweepEntry& e = es.at(0);
        CAPTURE(m);
        CAPTURE(e.status);
        REQUIRE(e.found);
        REQUIRE(e.orbit.residuals.s_symmetry);
        CHECK(*e.orbit.residuals.s_symmetry < 1e-8);
        CHECK(e.lambda > 0.5);
        CHECK(e.lambda < 0.7);
        const FourierLoop& x = e.orbit.loop;
        for (int k = -x.kmax(); k <= x.kmax(); ++k)
            if (((k - 1) % m + m) % m != 0) CHECK(x.mode(k).norm() == 0.0);
    }
}

TEST_CASE("contact certificates") {
    SUBCASE("round sphere is star-shaped") {
        const ContactCertificate c = contact_certify(*radial(kPi), kPi / 4, {2000});
        CHECK(c.valid);
        CHECK(c.star_shaped);
        CHECK(c.star_margin == doctest::Approx(1.0));
        CHECK(c.samples == 2000);
    }
    SUBCASE("two-component level needs alpha_eps") {
        const ModelPtr H = builtin("ellipsoid_level", 1, {{"a", 1.0}, {"b", 0.0}, {"well", 1.0}});
        const ContactCertificate c = contact_certify(*H, 0.5, {2000});
        CHECK(c.valid);
        CHECK(c.method == "alpha_eps");
        CHECK_FALSE(c.star_shaped);
        CHECK(c.max_alpha < 0.0);
        CHECK(c.eps > 0.0);
        std::mt19937_64 rng(1);
        for (const Vec& z : sample_level_set(*H, 0.5, 2.0, 200, 9))
            CHECK(alpha_eps_on_field(*H, z, c.eps) < 0.0);
        CHECK(to_text(c).find("method = alpha_eps") != std::string::npos);
    }
    SUBCASE("violating <d_x H, x> > 0 gives a witness") {
        const ModelPtr H = builtin("ellipsoid_level", 1,
                                   {{"a", 1.0}, {"b", 0.0}, {"well", 1.0}, {"kappa", -1.5}, {"mu", 1.0}});
        CHECK_THROWS_WITH_AS(contact_certify(*H, 0.5, {2000}), doctest::Contains("witness"), Error);
    }
}

TEST_CASE("alpha_eps matches the expanded formula") {
    // H = x^2 + 3 y^2 + x^2 y^2: d_x H = 2x + 2x y^2, d_y H = 6y + 2 x^2 y, d_y H(0, y) = 6y, H_yy(0, y) = 6
    const ModelPtr H = builtin("ellipsoid_level", 1, {{"a", 1.0}, {"b", 3.0}, {"kappa", 1.0}});
    Vec z(2);
    z << 0.3, -0.7;
    const double x = 0.3, y = -0.7, eps = 0.2;
    const double hx = 2 * x + 2 * x * y * y, hy = 6 * y + 2 * x * x * y;
    const double expect = -hx * x - eps * hy * 6 * y + eps * 6 * hx * x;
    CHECK(alpha_eps_on_field(*H, z, eps) == doctest::Approx(expect).epsilon(1e-7));
}

TEST_CASE("orbit CSV round trip reproduces the residuals") {
    const BrakeOrbit o = loop_to_orbit(circle(6, 0.8), radial(kPi / 2), 0, 2, {}, 2.0);
    std::stringstream ss;
    write_orbit_csv(ss, o);
    CHECK(ss.str().rfind("t,x1,x2\n", 0) == 0);
    double T = 0.0;
    const Mat S = read_orbit_csv(ss, &T);
    CHECK(T == doctest::Approx(2.0).epsilon(1e-14));
    const OrbitResiduals r = sample_residuals(S, T, *radial(kPi / 2), 2);
    CHECK(r.ode == doctest::Approx(o.residuals.ode).epsilon(1e-6));
    CHECK(r.ode < 1e-10);
    CHECK(*r.s_symmetry < 1e-12);
    const nlohmann::json meta = orbit_metadata(o);
    CHECK(meta["period"] == 2.0);
    CHECK(meta["verified"] == true);
    CHECK(meta["residuals"].contains("s_symmetry"));
}

TEST_CASE("window profile") {
    const WindowProfile f(0.9, 1.0, 5.0);
    CHECK(f.value(0.85) == 0.0);
    CHECK(f.value(1.0) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(f.value(1.3) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(f.d1(0.93) == doctest::Approx(kPi).epsilon(1e-14));
    for (double s = 0.9005; s < 0.995; s += 0.0071) {
        const double h = 1e-6;
        CHECK(f.d1(s) == doctest::Approx((f.value(s + h) - f.value(s - h)) / (2 * h)).epsilon(1e-5));
        CHECK(f.d2(s) == doctest::Approx((f.d1(s + h) - f.d1(s - h)) / (2 * h)).epsilon(1e-5));
        CHECK(f.d1(s) >= 0.0);
    }
    CHECK_THROWS_AS(WindowProfile(0.0, 1.0, 1.0), Error);
}
