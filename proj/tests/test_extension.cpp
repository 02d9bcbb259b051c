#include "doctest.h"

#include "brake/extension.hpp"

using namespace brake;

namespace {

ModelPtr bump(int n, double m) { return builtin("radial_bump", n, {{"m", m}}); }

}  // namespace

TEST_CASE("extension profile shape") {
    const double c = kPi + 0.25, m = kPi + 0.5;
    const ExtensionProfile f(m, c);
    CHECK(f.value(0.5) == m);
    CHECK(f.value(1.0) == doctest::Approx(m));
    CHECK(f.value(f.s_inf() + 2.0) == doctest::Approx(c * (f.s_inf() + 2.0)));
    for (int i = 1; i < 1000; ++i) {
        const double s = 1.0 + (f.s_inf() - 1.0) * i / 1000.0;
        REQUIRE(f.value(s) >= c * s - 1e-12);
        REQUIRE(f.d1(s) > 0.0);
        REQUIRE(f.d1(s) <= c * (1 + 1e-15));
        const double h = 1e-5;
        CHECK(f.d1(s) == doctest::Approx((f.value(s + h) - f.value(s - h)) / (2 * h)).epsilon(1e-6));
        CHECK(f.d2(s) == doctest::Approx((f.d1(s + h) - f.d1(s - h)) / (2 * h)).epsilon(1e-5).scale(1.0));
    }
    // C^2 at both knots
    for (double s : {1.0, f.s_inf()}) {
        CHECK(std::abs(f.d1(s - 1e-9) - f.d1(s + 1e-9)) < 1e-7);
        CHECK(std::abs(f.d2(s - 1e-9) - f.d2(s + 1e-9)) < 1e-6);
    }
    CHECK_THROWS_AS(ExtensionProfile(3.0, kPi), Error);
}

TEST_CASE("extended radial bump") {
    for (int n : {1, 2}) {
        const QuadraticForm q(n, 2.0);
        const ExtendedPtr Hb = extend(bump(n, kPi + 0.5), q, 0.25);
        const double c = Hb->slope();
        CHECK(c == doctest::Approx(kPi + 0.25));
        std::mt19937_64 rng(4);
        for (int i = 0; i < 1000; ++i) {
            const Vec z = sample_ball(n, 1.5 * Hb->crossover_radius(), rng);
            const double v = Hb->value(z);
            REQUIRE(std::abs(Hb->value(apply_N0(z)) - v) < 1e-12);
            REQUIRE(v >= 0.0);
            REQUIRE(v >= c * q.value(z) - Hb->gamma());
            if (q.value(z) < 1.0) REQUIRE(v == Hb->base().value(z));
        }
        for (int i = 0; i < 20; ++i) {
            const Vec z = sample_sphere(n, Hb->crossover_radius() * (1.0 + i), rng);
            CHECK(Hb->value(z) == doctest::Approx(c * q.value(z)));
        }
        // second difference across the gluing locus matches the spline
        for (int i = 0; i < 20; ++i) {
            const Vec z = sample_q_level(q, 1.0 + 1e-2, rng);
            const Vec d = z / std::sqrt(q.value(z));
            const double h = 1e-4;
            const double fd = (Hb->value(z + h * d) - 2 * Hb->value(z) + Hb->value(z - h * d)) / (h * h);
            CHECK(fd == doctest::Approx(d.dot(Hb->hessian(z) * d)).epsilon(1e-4));
        }
        double worst = 0.0;
        for (int i = 0; i < 500; ++i) {
            const Vec z = sample_ball(n, 1.2 * Hb->crossover_radius(), rng);
            Eigen::SelfAdjointEigenSolver<Mat> es(Hb->hessian(z));
            worst = std::max(worst, es.eigenvalues().cwiseAbs().maxCoeff());
        }
        CHECK(worst <= Hb->grad_lipschitz());
    }
}

TEST_CASE("extension preconditions") {
    const QuadraticForm q(1, 1.0);
    CHECK_THROWS_AS(extend(bump(1, kPi + 0.2), q, 0.25), Error);
    CHECK_THROWS_AS(extend(builtin("s_symmetric_radial", 1), q, 0.25), Error);
    ModelSpec wide{"radial_bump", {{"r0", "0.3"}, {"r1", "1.2"}, {"m", "5"}}};
    CHECK_THROWS_AS(extend(builtin(wide), q, 0.25), Error);
}
