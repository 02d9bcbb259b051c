#include "brake/minimax.hpp"

#include "brake/parallel.hpp"

#include <ostream>

namespace brake {

RestrictedFunctional::RestrictedFunctional(ModelPtr H, int kmax, int num_samples, int s_order)
    : A_(std::move(H), kmax, num_samples), m_(s_order) {
    if (s_order == 1 || s_order < 0) throw Error("S-symmetry order must be 0 (off) or at least 2");
}

bool RestrictedFunctional::active(int k) const { return m_ == 0 || ((k - 1) % m_ + m_) % m_ == 0; }

FourierLoop RestrictedFunctional::restrict(const FourierLoop& x) const {
    return m_ == 0 ? x : s_symmetry_project(x, m_);
}

ActionEvaluation RestrictedFunctional::evaluate(const FourierLoop& x) const {
    ActionEvaluation e = A_.evaluate(x);
    if (m_ != 0) {
        e.grad = restrict(e.grad);
        e.grad_norm = norm(e.grad);
    }
    return e;
}

namespace {

double linear_rate(int k) { return k > 0 ? -1.0 : (k < 0 ? 1.0 : 0.0); }

double phi1(double z) { return z == 0.0 ? 1.0 : std::expm1(z) / z; }

double phi2(double z) { return z == 0.0 ? 0.5 : (std::expm1(z) - z) / (z * z); }

// grad b restricted to the subspace, recovered from grad Phi = x+ - x- - grad b.
FourierLoop nonlinear_part(const FourierLoop& x, const ActionEvaluation& e) {
    return project(x, Sector::plus) - project(x, Sector::minus) - e.grad;
}

FourierLoop etd_predict(const FourierLoop& x, const FourierLoop& N, double h) {
    Mat c = x.coeffs();
    for (int k = -x.kmax(); k <= x.kmax(); ++k) {
        const double z = linear_rate(k) * h;
        c.row(k + x.kmax()) = std::exp(z) * x.coeffs().row(k + x.kmax()) + h * phi1(z) * N.coeffs().row(k + x.kmax());
    }
    return FourierLoop(x.n(), x.kmax(), c);
}

FourierLoop etd_correct(const FourierLoop& a, const FourierLoop& Na, const FourierLoop& Nx, double h) {
    Mat c = a.coeffs();
    for (int k = -a.kmax(); k <= a.kmax(); ++k) {
        const double z = linear_rate(k) * h;
        c.row(k + a.kmax()) += h * phi2(z) * (Na.coeffs().row(k + a.kmax()) - Nx.coeffs().row(k + a.kmax()));
    }
    return FourierLoop(a.n(), a.kmax(), c);
}

FourierLoop random_direction(const RestrictedFunctional& F, bool plus, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat c = Mat::Zero(2 * F.kmax() + 1, F.n());
    for (int k = -F.kmax(); k <= F.kmax(); ++k) {
        if (!F.active(k) || (plus ? k <= 0 : k > 0)) continue;
        for (int j = 0; j < F.n(); ++j) c(k + F.kmax(), j) = g(rng) / std::sqrt(mode_weight(k, Sobolev::Half));
    }
    FourierLoop d(F.n(), F.kmax(), c);
    const double r = norm(d);
    if (r == 0.0) return d;
    return (1.0 / r) * d;
}

}  // namespace

FourierLoop flow_step(const FourierLoop& x, double dt, const RestrictedFunctional& F) {
    if (!(dt > 0.0)) throw Error("flow step needs dt > 0");
    const FourierLoop Nx = nonlinear_part(x, F.evaluate(x));
    const FourierLoop a = etd_predict(x, Nx, dt);
    const FourierLoop Na = nonlinear_part(a, F.evaluate(a));
    return etd_correct(a, Na, Nx, dt);
}

FourierLoop flow_fixed(const FourierLoop& x, double T, double dt, const RestrictedFunctional& F) {
    const int steps = static_cast<int>(std::ceil(T / dt - 1e-9));
    const double h = T / steps;
    FourierLoop y = x;
    for (int i = 0; i < steps; ++i) y = flow_step(y, h, F);
    return y;
}

FlowState start_flow(const FourierLoop& x, const RestrictedFunctional& F, const FlowControls& c) {
    FlowState s;
    s.x = F.restrict(x);
    s.eval = F.evaluate(s.x);
    s.dt = c.dt;
    s.max_norm = norm(s.x);
    return s;
}

void advance_flow(FlowState& s, double t_end, const RestrictedFunctional& F, const FlowControls& c) {
    while (s.time < t_end - 1e-13) {
        const double h = std::min(s.dt, t_end - s.time);
        const FourierLoop Nx = nonlinear_part(s.x, s.eval);
        const FourierLoop a = etd_predict(s.x, Nx, h);
        const FourierLoop Na = nonlinear_part(a, F.evaluate(a));
        const FourierLoop y = etd_correct(a, Na, Nx, h);
        const ActionEvaluation ey = F.evaluate(y);
        if (ey.phi > s.eval.phi + 1e-12 * (1.0 + std::abs(s.eval.phi))) {
            if (h > c.dt_min) {
                s.dt = 0.5 * h;
                continue;
            }
            s.monotone = false;
        }
        s.x = y;
        s.eval = ey;
        s.time += h;
        s.max_norm = std::max(s.max_norm, norm(y));
        if (h >= s.dt) s.dt = std::min(1.25 * s.dt, c.dt_max);
    }
}

void MinimaxProblem::validate() const {
    if (!Hbar) throw Error("minimax problem has no Hamiltonian");
    if (!(alpha > 0.0 && tau > alpha)) throw Error("minimax problem needs tau > alpha > 0");
    if (!(beta > 0.0)) throw Error("minimax problem needs beta > 0");
    if (directions < 0 || s_grid < 3) throw Error("minimax sampling needs directions >= 0 and s_grid >= 3");
}

FourierLoop e_plus(int n, int kmax) {
    Vec e = Vec::Zero(2 * n);
    e(n) = 1.0;
    return make_loop(n, kmax, {{1, e}});
}

double sample_boundary_max(const RestrictedFunctional& F, double tau, int samples, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const FourierLoop ep = e_plus(F.n(), F.kmax());
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const FourierLoop v = random_direction(F, false, rng);
        double r = 0.0, s = 0.0;
        switch (i % 3) {
            case 0: r = tau * u(rng); s = tau; break;
            case 1: r = tau; s = tau * u(rng); break;
            default: r = tau * u(rng); s = 0.0; break;
        }
        worst = std::max(worst, F.evaluate(r * v + s * ep).phi);
    }
    return worst;
}

double sample_gamma_min(const RestrictedFunctional& F, double alpha, int samples, std::mt19937_64& rng) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const FourierLoop d = i == 0 ? (1.0 / std::sqrt(kTwoPi)) * e_plus(F.n(), F.kmax()) : random_direction(F, true, rng);
        best = std::min(best, F.action().phi(alpha * d));
    }
    return best;
}

TauEstimate estimate_tau_star(const ExtendedHamiltonian& Hbar, int kmax, int s_order, unsigned seed, int samples,
                              int max_doublings) {
    const double rho = Hbar.form().radius();
    const double c = Hbar.slope();
    const double g = Hbar.gamma();
    TauEstimate est;
    est.bound = std::max(rho * std::sqrt(g / Hbar.eps()), std::sqrt(g / std::min(0.5, c * Hbar.form().min_weight())));
    est.tau = est.bound;
    const RestrictedFunctional F(std::shared_ptr<const HamiltonianModel>(&Hbar, [](const HamiltonianModel*) {}), kmax,
                                 0, s_order);
    std::mt19937_64 rng(seed);
    for (;;) {
        est.sampled_max = sample_boundary_max(F, est.tau, samples, rng);
        if (est.sampled_max <= 1e-9) return est;
        if (est.doublings == max_doublings)
            throw Error("tau* verification failed: sampled boundary max " + format_double(est.sampled_max));
        est.tau *= 2.0;
        ++est.doublings;
    }
}

AlphaBeta estimate_alpha_beta(const ExtendedHamiltonian& Hbar, int kmax, int s_order, unsigned seed, int samples) {
    const RestrictedFunctional F(std::shared_ptr<const HamiltonianModel>(&Hbar, [](const HamiltonianModel*) {}), kmax,
                                 0, s_order);
    AlphaBeta ab;
    double sum = 0.0;
    for (int k = 1; k <= kmax; ++k)
        if (F.active(k)) sum += 1.0 / (kTwoPi * k);
    ab.embedding = std::sqrt(sum);

    std::mt19937_64 rng(seed);
    // sampled cubic constant: b(x) <= cubic |x|^3 on X+ near 0
    for (int i = 0; i < 64; ++i) {
        const FourierLoop d =
            i == 0 ? (1.0 / std::sqrt(kTwoPi)) * e_plus(F.n(), F.kmax()) : random_direction(F, true, rng);
        for (int j = 1; j <= 40; ++j) {
            const double r = 0.05 * j;
            ab.cubic = std::max(ab.cubic, F.action().b(r * d) / (r * r * r));
        }
    }

    struct Candidate {
        std::string method;
        double alpha;
        bool vanish;
    };
    std::vector<Candidate> candidates;
    if (const auto rv = Hbar.vanish_radius()) candidates.push_back({"vanishing-ball", 0.99 * *rv / ab.embedding, true});
    if (ab.cubic > 0.0) candidates.push_back({"cubic", 1.0 / (3.0 * ab.cubic), false});

    AlphaBeta best = ab;
    for (const auto& cand : candidates) {
        double alpha = cand.alpha;
        for (int attempt = 0; attempt < 12; ++attempt, alpha *= 0.7) {
            const double beta =
                cand.vanish ? 0.5 * alpha * alpha : 0.5 * alpha * alpha - ab.cubic * alpha * alpha * alpha;
            if (!(beta > 0.0)) continue;
            const double smin = sample_gamma_min(F, alpha, samples, rng);
            if (smin >= beta - 1e-9) {
                if (beta > best.beta) {
                    best.alpha = alpha;
                    best.beta = beta;
                    best.sampled_min = smin;
                    best.method = cand.method;
                }
                break;
            }
        }
    }
    if (best.beta > 0.0) return best;
    throw Error("no positive beta found on Gamma_alpha; H must vanish near 0 (displace first)");
}

MinimaxProblem make_problem(ExtendedPtr Hbar, int kmax, int s_order, unsigned seed) {
    MinimaxProblem p;
    p.Hbar = Hbar;
    p.kmax = kmax;
    p.s_order = s_order;
    p.seed = seed;
    const AlphaBeta ab = estimate_alpha_beta(*Hbar, kmax, s_order, seed);
    const TauEstimate te = estimate_tau_star(*Hbar, kmax, s_order, seed + 1);
    p.alpha = ab.alpha;
    p.beta = ab.beta;
    p.tau = std::max(te.tau, 2.0 * ab.alpha);
    return p;
}

void FlowTrace::write_csv(std::ostream& os) const {
    os << "time,sup_phi,argmax_grad_norm\n";
    for (const auto& r : rows)
        os << format_double(r.time) << ',' << format_double(r.sup_phi) << ',' << format_double(r.argmax_grad_norm)
           << '\n';
}

RefineResult refine_critical(const FourierLoop& x0, const RestrictedFunctional& F, double grad_tol, int max_iterations) {
    const int n = F.n(), K = F.kmax();
    std::vector<std::pair<int, int>> vars;  // (mode, component)
    std::vector<double> scale;
    for (int k = -K; k <= K; ++k)
        if (F.active(k))
            for (int j = 0; j < n; ++j) {
                vars.emplace_back(k, j);
                scale.push_back(std::sqrt(mode_weight(k, Sobolev::Half)));
            }
    const int d = static_cast<int>(vars.size());

    auto to_vec = [&](const FourierLoop& x) {
        Vec y(d);
        for (int i = 0; i < d; ++i) y(i) = scale[i] * x.coeffs()(vars[i].first + K, vars[i].second);
        return y;
    };
    auto to_loop = [&](const Vec& y) {
        Mat c = Mat::Zero(2 * K + 1, n);
        for (int i = 0; i < d; ++i) c(vars[i].first + K, vars[i].second) = y(i) / scale[i];
        return FourierLoop(n, K, c);
    };

    RefineResult res;
    res.x = F.restrict(x0);
    res.eval = F.evaluate(res.x);
    Vec y = to_vec(res.x);
    Vec r = to_vec(res.eval.grad);
    double mu = -1.0;
    for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
        if (res.eval.grad_norm < grad_tol) {
            res.converged = true;
            res.status = "converged";
            return res;
        }
        Mat J(d, d);
        const double h = 1e-6 * (1.0 + y.norm() / std::sqrt(static_cast<double>(d)));
        for (int i = 0; i < d; ++i) {
            Vec yp = y, ym = y;
            yp(i) += h;
            ym(i) -= h;
            J.col(i) = (to_vec(F.evaluate(to_loop(yp)).grad) - to_vec(F.evaluate(to_loop(ym)).grad)) / (2.0 * h);
        }
        const Mat JtJ = J.transpose() * J;
        const Vec Jtr = J.transpose() * r;
        if (mu < 0.0) mu = 1e-6 * std::max(1e-12, JtJ.diagonal().maxCoeff());
        bool improved = false;
        for (int tries = 0; tries < 12 && !improved; ++tries) {
            const Mat A = JtJ + mu * Mat::Identity(d, d);
            const Vec step = -A.ldlt().solve(Jtr);
            const FourierLoop xn = to_loop(y + step);
            const ActionEvaluation en = F.evaluate(xn);
            if (en.grad_norm < res.eval.grad_norm) {
                y += step;
                res.x = xn;
                res.eval = en;
                r = to_vec(en.grad);
                mu = std::max(mu / 5.0, 1e-15);
                improved = true;
            } else {
                mu *= 8.0;
            }
        }
        if (!improved) {
            res.status = "stalled at |grad| = " + format_double(res.eval.grad_norm);
            return res;
        }
    }
    res.converged = res.eval.grad_norm < grad_tol;
    res.status = res.converged ? "converged" : "iteration limit at |grad| = " + format_double(res.eval.grad_norm);
    return res;
}

namespace {

struct OmegaSample {
    int dir = 0;  // 0 is the pure e+ ray
    double r = 0.0;
    double s = 0.0;
    double spacing = 0.0;
    FlowState state;
};

}  // namespace

MinimaxResult minimax_search(const MinimaxProblem& P) {
    P.validate();
    const RestrictedFunctional F(P.Hbar, P.kmax, P.num_samples, P.s_order);
    const FourierLoop ep = e_plus(F.n(), F.kmax());
    std::mt19937_64 rng(P.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    std::vector<FourierLoop> dirs{FourierLoop(F.n(), F.kmax())};
    std::vector<double> radii{0.0};
    for (int i = 0; i < P.directions; ++i) {
        dirs.push_back(random_direction(F, false, rng));
        const double w = u(rng);
        radii.push_back(P.tau * w * w);
    }

    std::vector<OmegaSample> samples;
    const double spacing = P.tau / (P.s_grid - 1);
    for (std::size_t d = 0; d < dirs.size(); ++d)
        for (int i = 1; i < P.s_grid; ++i) samples.push_back({static_cast<int>(d), radii[d], spacing * i, spacing, {}});

    auto init = [&](OmegaSample& s) { s.state = start_flow(s.r * dirs[s.dir] + s.s * ep, F, P.flow); };
    parallel_for(samples.size(), P.threads, [&](std::size_t i) { init(samples[i]); });

    MinimaxResult res;
    std::vector<std::pair<double, double>> history;
    for (double T = P.flow.epoch; T <= P.flow.max_time + 1e-12; T += P.flow.epoch) {
        parallel_for(samples.size(), P.threads, [&](std::size_t i) { advance_flow(samples[i].state, T, F, P.flow); });

        auto argmax = [&] {
            std::size_t b = 0;
            for (std::size_t i = 1; i < samples.size(); ++i)
                if (samples[i].state.eval.phi > samples[b].state.eval.phi) b = i;
            return b;
        };
        std::size_t best = argmax();
        // bisect the flowed path around the maximiser until the sup settles
        for (int level = 0; level < P.refinements_per_epoch && res.refinements < P.max_refinements; ++level) {
            const OmegaSample parent = samples[best];
            const double h = 0.5 * parent.spacing;
            if (h < 1e-13 * P.tau) break;
            std::vector<OmegaSample> children;
            for (double s : {parent.s - h, parent.s + h})
                if (s > 0.0 && s < P.tau) children.push_back({parent.dir, parent.r, s, h, {}});
            parallel_for(children.size(), P.threads, [&](std::size_t i) {
                init(children[i]);
                advance_flow(children[i].state, T, F, P.flow);
            });
            samples[best].spacing = h;
            for (auto& c : children) samples.push_back(std::move(c));
            ++res.refinements;
            const std::size_t next = argmax();
            const double gain = samples[next].state.eval.phi - parent.state.eval.phi;
            best = next;
            if (gain <= P.flow.sup_tol * (1.0 + std::abs(parent.state.eval.phi)) &&
                samples[best].state.eval.grad_norm < P.flow.coarse_grad)
                break;
        }

        const FlowState& top = samples[best].state;
        res.trace.snapshots.push_back(top.x);
        res.trace.rows.push_back({T, top.eval.phi, top.eval.grad_norm, static_cast<int>(res.trace.snapshots.size()) - 1});
        history.emplace_back(T, top.eval.phi);

        if (top.eval.phi < P.beta - 1e-9) {
            res.status = "sup collapsed below beta; sampling too coarse";
            break;
        }

        bool stable = false;
        for (const auto& [t, v] : history)
            if (t <= T - 1.0 + 1e-12 && std::abs(v - top.eval.phi) <= P.flow.sup_tol * (1.0 + std::abs(v))) stable = true;
        if (stable || top.eval.grad_norm < P.flow.coarse_grad) {
            const RefineResult rr = refine_critical(top.x, F, P.flow.grad_tol);
            if (rr.converged && rr.eval.phi >= P.beta - 1e-9) {
                res.x = rr.x;
                res.eval = rr.eval;
                res.c_value = rr.eval.phi;
                res.converged = true;
                res.status = "converged";
                break;
            }
            res.status = "refinement: " + rr.status;
        }
    }

    for (const auto& s : samples) {
        res.max_norm = std::max(res.max_norm, s.state.max_norm);
        res.monotone = res.monotone && s.state.monotone;
    }
    res.samples = static_cast<int>(samples.size());
    if (!res.converged) {
        const auto& last = res.trace.snapshots.back();
        res.x = last;
        res.eval = F.evaluate(last);
        res.c_value = res.eval.phi;
        if (res.status.empty()) res.status = "no critical point within max_time";
    }
    res.trace.terminal = res.x;
    return res;
}

}  // namespace brake
