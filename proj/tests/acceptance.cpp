// One PASS/FAIL line per acceptance criterion; exit status 0 iff all pass.

#include "brake/capacity.hpp"
#include "brake/parallel.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace brake;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

FourierLoop random_loop(int n, int kmax, double scale, std::mt19937_64& rng, bool decay = true) {
    std::normal_distribution<double> g;
    Mat c(2 * kmax + 1, n);
    for (int i = 0; i < c.rows(); ++i) {
        const int k = i - kmax;
        for (int j = 0; j < n; ++j) c(i, j) = scale * g(rng) / (decay ? 1.0 + k * k : 1.0);
    }
    return FourierLoop(n, kmax, c);
}

L2Loop random_l2(int n, int kmax, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat c(2 * kmax + 1, 2 * n);
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < 2 * n; ++j) c(i, j) = g(rng);
    return L2Loop(n, kmax, c);
}

ExtendedPtr extended_bump(int n, double m = kPi + 0.5) {
    return extend(builtin("radial_bump", n, {{"m", m}}), QuadraticForm(n, 1.0), 0.25);
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

DomainSpec ball(double r) {
    DomainSpec d;
    d.r = r;
    return d;
}

OnsetOptions onset_options() {
    OnsetOptions o;
    o.kmax = 32;
    o.width = 0.2;
    o.threads = default_threads();
    return o;
}

Outcome ball_capacity() {
    const CapacityEstimate e = onset_probe(ball(1.0), onset_options());
    if (!e.lower || !e.upper) return {false, "no bracket: " + e.status};
    return {*e.lower <= kPi && kPi <= *e.upper, "bracket [" + num(*e.lower) + ", " + num(*e.upper) + "] vs pi"};
}

Outcome scaling() {
    const CapacityEstimate a = onset_probe(ball(1.0), onset_options());
    OnsetOptions o = onset_options();
    o.width = 0.8;
    const CapacityEstimate b = onset_probe(ball(2.0), o);
    if (!a.lower || !a.upper || !b.lower || !b.upper) return {false, "missing bracket"};
    const double ratio = 0.5 * (*b.lower + *b.upper) / (0.5 * (*a.lower + *a.upper));
    return {3.5 <= ratio && ratio <= 4.5, "midpoint ratio " + num(ratio)};
}

Outcome adjointness() {
    std::mt19937_64 rng(21);
    double worst = 0.0;
    int violations = 0;
    for (int n : {1, 2, 3})
        for (int kmax : {4, 16, 64})
            for (int trial = 0; trial < 100; ++trial) {
                const FourierLoop x = random_loop(n, kmax, 1.0, rng, false);
                const L2Loop y = random_l2(n, kmax, rng);
                const double err = std::abs(inner(embed(x), y) - inner(x, adjoint_embed(y), Sobolev::Half)) /
                                   (1 + norm(x) * norm(y));
                worst = std::max(worst, err);
                if (norm(adjoint_embed(y), Sobolev::One) > norm(y) * (1 + 1e-14)) ++violations;
            }
    return {worst < 1e-10 && violations == 0,
            "max scaled defect " + num(worst) + ", norm violations " + std::to_string(violations)};
}

Outcome gradient() {
    std::mt19937_64 rng(6);
    const ActionFunctional A(extended_bump(1), 16);
    double worst_rel = 0.0, worst_forms = 0.0;
    for (int l = 0; l < 10; ++l) {
        const FourierLoop x = random_loop(1, 16, 0.5, rng);
        const ActionEvaluation e = A.evaluate(x);
        worst_forms = std::max(worst_forms, std::abs(A.symplectic_form(x) - e.phi) / (1 + std::abs(e.phi)));
        for (int d = 0; d < 20; ++d) {
            FourierLoop h = random_loop(1, 16, 1.0, rng);
            h = (1.0 / norm(h)) * h;
            const double step = 1e-5;
            const double fd = (A.phi(x + step * h) - A.phi(x - step * h)) / (2 * step);
            const double an = inner(e.grad, h, Sobolev::Half);
            worst_rel = std::max(worst_rel, std::abs(fd - an) / std::max(std::abs(an), 1e-12));
        }
    }
    return {worst_rel < 1e-5 && worst_forms < 1e-9,
            "max relative FD error " + num(worst_rel) + ", formula gap " + num(worst_forms)};
}

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

Outcome flow() {
    std::mt19937_64 rng(2);
    const RestrictedFunctional F(extended_bump(1), 8);
    const FourierLoop x = random_loop(1, 8, 0.12, rng);
    std::vector<double> err;
    for (double dt : {0.1, 0.05, 0.025, 0.0125}) err.push_back(norm(flow_fixed(x, 1.0, dt, F) - flow_fixed(x, 1.0, dt / 2, F)));
    double order = 1e9;
    for (std::size_t i = 0; i + 1 < err.size(); ++i) order = std::min(order, std::log2(err[i] / err[i + 1]));
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        FourierLoop x0 = random_loop(1, 8, 0.12, rng);
        while (norm(x0) > 0.35) x0 = random_loop(1, 8, 0.12, rng);
        worst = std::max(worst, norm(rk4_reference(x0, 1.0, 2000, F) - flow_fixed(x0, 1.0, 2.5e-4, F)));
    }
    return {worst < 1e-6 && order >= 1.9, "terminal gap " + num(worst) + ", min order " + num(order)};
}

Outcome linking() {
    const ExtendedPtr Hb = extended_bump(1);
    const int K = 16;
    const TauEstimate te = estimate_tau_star(*Hb, K);
    const AlphaBeta ab = estimate_alpha_beta(*Hb, K);
    const RestrictedFunctional F(Hb, K);
    std::mt19937_64 rng(5);
    const double sup_boundary = sample_boundary_max(F, te.tau, 300, rng);
    const double min_gamma = sample_gamma_min(F, ab.alpha, 200, rng);
    return {sup_boundary <= 1e-9 && ab.beta > 0.0 && min_gamma >= ab.beta - 1e-9,
            "sup Phi on boundary " + num(sup_boundary) + ", min Phi on Gamma " + num(min_gamma) + ", beta " +
                num(ab.beta)};
}

// r^2 of the circle orbit of h(|z|^2), h = m smoothstep((S - S0) / (S1 - S0)): h'(S) = pi on the rising half.
double circle_radius_sq(double m, double S0, double S1) {
    auto hp = [&](double S) { return m * smoothstep_d1((S - S0) / (S1 - S0)) / (S1 - S0); };
    double lo = S0, hi = S0 + 0.5 * (S1 - S0);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (hp(mid) < kPi ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Outcome orbit_verification() {
    const ExtendedPtr Hb = extended_bump(1);
    MinimaxProblem p = make_problem(Hb, 16, 0, 1);
    p.directions = 8;
    p.s_grid = 17;
    const MinimaxResult r = minimax_search(p);
    if (!r.converged) return {false, "minimax: " + r.status};
    const Localization loc = localize_check(loop_to_orbit(r.x, Hb), *Hb);
    if (!loc.inside || !loc.base_orbit) return {false, "orbit leaves E_K"};
    const BrakeOrbit& o = *loc.base_orbit;
    const double area = kPi * circle_radius_sq(kPi + 0.5, 0.04, 0.81);
    const double rel = std::abs(o.action - area) / area;
    const OrbitResiduals& res = o.residuals;
    const bool ok = o.verified && !o.constant && res.ode < 1e-6 && res.symmetry < 1e-10 && res.energy_drift < 1e-8 &&
                    loc.phi > 0.0 && rel < 1e-3;
    return {ok, "ode " + num(res.ode) + ", symmetry " + num(res.symmetry) + ", drift " + num(res.energy_drift) +
                    ", Phi " + num(loc.phi) + ", action/area - 1 = " + num(rel)};
}

Outcome energy_sweep_rows() {
    SweepOptions opt;
    opt.threads = default_threads();
    const std::vector<double> eps = {0.2, 0.1, 0.05};
    const std::vector<SweepEntry> rows = energy_sweep(builtin("s_symmetric_radial", 1, {{"a", 1.0}}), 1.0, eps, opt);
    bool ok = rows.size() == eps.size();
    std::string lambdas;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ok = ok && rows[i].found && rows[i].orbit.verified && std::abs(rows[i].lambda - 1.0) < eps[i];
        lambdas += (i ? ", " : "") + num(rows[i].lambda);
    }
    return {ok, "lambda = " + lambdas};
}

Outcome s_symmetric() {
    SweepOptions opt;
    const ModelPtr H = builtin("s_symmetric_radial", 1, {{"a", 1.0}});
    bool ok = true;
    std::string detail;
    for (int m : {2, 3}) {
        const SweepEntry e = s_symmetric_sweep(H, m, 0.5, {0.2}, opt).at(0);
        if (!e.found || !e.orbit.residuals.s_symmetry) {
            ok = false;
            detail += "m=" + std::to_string(m) + " failed: " + e.status + "; ";
            continue;
        }
        bool support = false, off_support = false;
        const FourierLoop& x = e.orbit.loop;
        for (int k = -x.kmax(); k <= x.kmax(); ++k) {
            const bool allowed = ((k - 1) % m + m) % m == 0;
            if (allowed && x.mode(k).norm() > 0.0) support = true;
            if (!allowed && x.mode(k).norm() != 0.0) off_support = true;
        }
        ok = ok && *e.orbit.residuals.s_symmetry < 1e-8 && support && !off_support;
        detail += "m=" + std::to_string(m) + ": S residual " + num(*e.orbit.residuals.s_symmetry) +
                  (off_support ? ", modes off j = 1 mod m" : "") + "; ";
    }
    return {ok, detail.substr(0, detail.size() - 2)};
}

Outcome torus() {
    const TorusEmbedding phi = torus_embedding(1.0, 1);
    const double pull = phi.pullback_residual(500, 1);
    const double equi = phi.equivariance_residual(5000, 1);
    DomainSpec outer = ball(std::sqrt(5.0));
    outer.symmetry = DomainSymmetry::N1;
    const bool contained = phi.image_in_annuli(5000, 1) && phi.image_in(outer, 5000, 1);

    // the bound chain runs on stored (serialized) estimate records
    DomainSpec t;
    t.kind = DomainKind::torus_product;
    t.r = 1.0;
    t.symmetry = DomainSymmetry::N1;
    CapacityEstimate te, be;
    te.domain = t;
    te.reference = reference_value(t);
    be.domain = outer;
    be.reference = reference_value(outer);
    const CapacityEstimate ts = estimate_from_json(nlohmann::json::parse(to_json(te).dump()));
    const CapacityEstimate bs = estimate_from_json(nlohmann::json::parse(to_json(be).dump()));
    const AuditReport a = monotonicity_audit(ts, bs, phi);
    const bool bound = a.holds && std::abs(a.outer_upper - 5 * kPi) < 1e-12 * 5 * kPi;
    return {pull < 1e-10 && equi < 1e-12 && contained && bound,
            "pullback " + num(pull) + ", equivariance " + num(equi) + ", contained " + (contained ? "yes" : "no") +
                ", c(torus) <= " + num(a.outer_upper)};
}

Outcome contact() {
    std::string detail;
    const ContactCertificate radial =
        contact_certify(*builtin("s_symmetric_radial", 1, {{"a", kPi}}), kPi / 4, {});
    const bool radial_ok = radial.valid && radial.method == "liouville";
    detail += "radial: method " + radial.method + " (eps " + num(radial.eps) + "), star-shaped " +
              (radial.star_shaped ? "yes" : "no");

    const ModelPtr aniso = builtin("ellipsoid_level", 1, {{"a", 1.0}, {"b", 0.0}, {"well", 1.0}});
    const ContactCertificate c = contact_certify(*aniso, 0.5, {});
    const bool aniso_ok = c.valid && c.method == "alpha_eps" && c.max_alpha < 0.0;
    detail += "; anisotropic: method " + c.method + ", eps " + num(c.eps) + ", max alpha " + num(c.max_alpha);

    bool witness = false;
    try {
        contact_certify(*builtin("ellipsoid_level", 1,
                                 {{"a", 1.0}, {"b", 0.0}, {"well", 1.0}, {"kappa", -1.5}, {"mu", 1.0}}),
                        0.5, {});
    } catch (const Error& e) {
        witness = std::string(e.what()).find("witness") != std::string::npos;
    }
    detail += std::string("; violator rejected with witness: ") + (witness ? "yes" : "no");
    return {radial_ok && aniso_ok && witness, detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"ball capacity bracket contains pi", ball_capacity},
        {"scaling ball(2) / ball(1)", scaling},
        {"adjointness of the embedding", adjointness},
        {"action gradient and formulas", gradient},
        {"flow integrator", flow},
        {"linking geometry", linking},
        {"orbit verification", orbit_verification},
        {"energy sweep", energy_sweep_rows},
        {"S-symmetric orbits", s_symmetric},
        {"torus embedding audits", torus},
        {"contact certificates", contact},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::printf("[%s] %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
