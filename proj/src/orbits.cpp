#include "brake/orbits.hpp"

#include "brake/parallel.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace brake {

namespace {

// Trigonometric differentiation matrix on N equispaced samples of one period;
// the Nyquist mode of an even N is dropped.
Mat diff_matrix(int N, double period) {
    const int kk = (N - 1) / 2;
    Mat D(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            double s = 0.0;
            for (int k = 1; k <= kk; ++k) s -= 2.0 * k * std::sin(2.0 * kPi * k * (i - j) / N);
            D(i, j) = 2.0 * kPi / (N * period) * s;
        }
    return D;
}

std::string vec_text(const Vec& v) {
    std::string s = "(";
    for (int i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v(i));
    return s + ")";
}

// First radius along d where H reaches `level`.
double ray_crossing(const HamiltonianModel& H, const Vec& d, double level) {
    double lo = 0.0, hi = 0.125;
    while (H.value(hi * d) < level) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw Error("H does not reach level " + format_double(level) + " along a ray");
    }
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (H.value(mid * d) < level ? lo : hi) = mid;
    }
    return hi;
}

// Slope part of WindowProfile in units of pi: sum of a * smoothstep((u - c) / w).
struct Ramp {
    double a, c, w;
};
constexpr Ramp kRamps[] = {{0.9, 0.0, 0.1}, {0.2, 0.1, 0.4}, {-1.1, 0.9, 0.1}};
constexpr double kCarryStart = 0.5, kCarryWidth = 0.4;

}  // namespace

WindowProfile::WindowProfile(double lo, double hi, double plateau) : lo_(lo), w_(hi - lo) {
    if (!(w_ > 0.0)) throw Error("window profile needs lo < hi");
    double slope_part = 0.0;
    for (const Ramp& r : kRamps) slope_part += r.a * r.w * smoothstep_integral((1.0 - r.c) / r.w);
    carry_ = plateau - kPi * w_ * slope_part;
    if (!(carry_ > 0.0)) throw Error("window plateau is too low for the window width");
}

double WindowProfile::value(double s) const {
    const double u = (s - lo_) / w_;
    if (u <= 0.0) return 0.0;
    double g = 0.0;
    for (const Ramp& r : kRamps) g += r.a * r.w * smoothstep_integral((std::min(u, 1.0) - r.c) / r.w);
    return kPi * w_ * g + carry_ * smoothstep((u - kCarryStart) / kCarryWidth);
}

double WindowProfile::d1(double s) const {
    const double u = (s - lo_) / w_;
    if (u <= 0.0 || u >= 1.0) return 0.0;
    double g = 0.0;
    for (const Ramp& r : kRamps) g += r.a * smoothstep((u - r.c) / r.w);
    return kPi * g + carry_ / (kCarryWidth * w_) * smoothstep_d1((u - kCarryStart) / kCarryWidth);
}

double WindowProfile::d2(double s) const {
    const double u = (s - lo_) / w_;
    if (u <= 0.0 || u >= 1.0) return 0.0;
    double g = 0.0;
    for (const Ramp& r : kRamps) g += r.a / r.w * smoothstep_d1((u - r.c) / r.w);
    return kPi * g / w_ + carry_ / (kCarryWidth * kCarryWidth * w_ * w_) * smoothstep_d2((u - kCarryStart) / kCarryWidth);
}

OrbitResiduals sample_residuals(const Mat& samples, double period, const HamiltonianModel& H, int s_order) {
    const int N = static_cast<int>(samples.rows());
    if (N < 3) throw Error("need at least 3 trajectory samples");
    if (samples.cols() != 2 * H.n()) throw Error("trajectory samples have the wrong dimension");
    if (!(period > 0.0)) throw Error("period must be positive");
    if (s_order > 0 && N % s_order != 0)
        throw Error("sample count " + std::to_string(N) + " is not divisible by the S order " + std::to_string(s_order));
    const Mat V = diff_matrix(N, period) * samples;
    OrbitResiduals r;
    const Vec z0 = samples.row(0).transpose();
    const double e0 = H.value(z0);
    if (s_order > 0) r.s_symmetry = 0.0;
    for (int i = 0; i < N; ++i) {
        const Vec z = samples.row(i).transpose();
        const Vec g = H.gradient(z);
        r.grad_sup = std::max(r.grad_sup, g.norm());
        r.ode = std::max(r.ode, (V.row(i).transpose() - apply_J(g)).norm());
        r.energy_drift = std::max(r.energy_drift, std::abs(H.value(z) - e0));
        r.excursion = std::max(r.excursion, (z - z0).norm());
        const Vec back = samples.row((N - i) % N).transpose();
        r.symmetry = std::max(r.symmetry, (back - apply_N0(z)).norm());
        if (s_order > 0) {
            const Vec ahead = samples.row((i + N / s_order) % N).transpose();
            r.s_symmetry = std::max(*r.s_symmetry, (ahead - rotate(z, 2.0 * kPi / s_order)).norm());
        }
    }
    return r;
}

bool passes(const OrbitResiduals& r, const OrbitTolerances& tol, std::string* why) {
    std::ostringstream os;
    const double ode_tol = tol.ode * (1.0 + r.grad_sup);
    if (!(r.ode <= ode_tol)) os << "ode residual " << r.ode << " > " << ode_tol << "; ";
    if (!(r.coefficients <= ode_tol)) os << "coefficient residual " << r.coefficients << " > " << ode_tol << "; ";
    if (!(r.symmetry <= tol.symmetry)) os << "symmetry residual " << r.symmetry << " > " << tol.symmetry << "; ";
    if (!(r.energy_drift <= tol.drift)) os << "energy drift " << r.energy_drift << " > " << tol.drift << "; ";
    if (r.s_symmetry && !(*r.s_symmetry <= tol.s_symmetry))
        os << "S-symmetry residual " << *r.s_symmetry << " > " << tol.s_symmetry << "; ";
    std::string s = os.str();
    if (!s.empty()) s.resize(s.size() - 2);
    if (why) *why = s;
    return s.empty();
}

BrakeOrbit loop_to_orbit(const FourierLoop& x, ModelPtr H, int num_samples, int s_order, const OrbitTolerances& tol,
                         double tau) {
    if (tau == 0.0 || !std::isfinite(tau)) throw Error("time scale tau must be finite and nonzero");
    if (x.n() != H->n()) throw Error("loop and Hamiltonian dimensions differ");
    const int K = x.kmax();
    int N = num_samples > 0 ? num_samples : 240;
    if (num_samples <= 0)
        while (N < default_samples(K)) N += 240;
    const Mat X = evaluate(x, N);
    Mat Y(N, X.cols());
    for (int i = 0; i < N; ++i) Y.row(i) = X.row(tau > 0 ? i : (N - i) % N);

    BrakeOrbit o;
    o.loop = x;
    o.tau = tau;
    o.period = std::abs(tau);
    o.s_order = s_order;
    o.trajectory = Y;
    o.hamiltonian = H->name();
    o.residuals = sample_residuals(Y, o.period, *H, s_order);

    // x_k = tau i*(a_k) / (2 pi k) for k != 0 and i*(a_0) = 0, with a_k the modes of grad H(x)
    const ActionFunctional A(H, K);
    const Mat gb = A.grad_b(x).coeffs();
    double coef = 0.0;
    for (int k = -K; k <= K; ++k) {
        const double sign = k > 0 ? 1.0 : (k < 0 ? -1.0 : 0.0);
        coef = std::max(coef, (sign * x.coeffs().row(k + K) - tau * gb.row(k + K)).cwiseAbs().maxCoeff());
    }
    o.residuals.coefficients = coef;
    o.energy = H->value(Y.row(0).transpose());
    o.action = (tau > 0 ? 1.0 : -1.0) * action_a(x);
    o.constant = o.residuals.excursion < tol.nonconstant;
    o.verified = passes(o.residuals, tol, &o.diagnostics);
    if (o.constant) o.diagnostics += std::string(o.diagnostics.empty() ? "" : "; ") + "constant loop";
    return o;
}

Localization localize_check(const BrakeOrbit& orbit, const ExtendedHamiltonian& Hbar, const OrbitTolerances& tol) {
    Localization L;
    double mean = 0.0;
    for (Eigen::Index i = 0; i < orbit.trajectory.rows(); ++i) {
        const Vec z = orbit.trajectory.row(i).transpose();
        L.max_q = std::max(L.max_q, Hbar.form().value(z));
        mean += Hbar.value(z);
    }
    mean /= static_cast<double>(orbit.trajectory.rows());
    L.phi = action_a(orbit.loop) - mean;
    L.inside = L.max_q < 1.0;
    if (L.inside)
        L.base_orbit = loop_to_orbit(orbit.loop, Hbar.base_ptr(), static_cast<int>(orbit.trajectory.rows()),
                                     orbit.s_order, tol, orbit.tau);
    return L;
}

ComposedModel::ComposedModel(ModelPtr H, ProfilePtr f, double box, std::optional<double> plateau,
                             std::optional<double> vanish, unsigned seed)
    : H_(std::move(H)), f_(std::move(f)), plateau_(plateau), vanish_(vanish) {
    std::mt19937_64 rng(seed);
    double sup = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const Vec z = sample_ball(H_->n(), box, rng);
        Eigen::SelfAdjointEigenSolver<Mat> es(hessian(z));
        sup = std::max(sup, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    M_ = 1.5 * sup;
}

Vec ComposedModel::gradient(const Vec& z) const { return f_->d1(H_->value(z)) * H_->gradient(z); }

Mat ComposedModel::hessian(const Vec& z) const {
    const double h = H_->value(z);
    const double d1 = f_->d1(h), d2 = f_->d2(h);
    const Vec g = H_->gradient(z);
    Mat out = d2 * g * g.transpose();
    if (d1 != 0.0) out += d1 * H_->hessian(z);
    return out;
}

SweepEntry window_orbit(ModelPtr H, double lo, double hi, int s_order, const SweepOptions& opt) {
    SweepEntry e;
    e.lo = lo;
    e.hi = hi;
    try {
        if (!(lo < hi)) throw Error("empty level window");
        const int n = H->n();
        const Symmetry sym = H->symmetry();
        if (!sym.n0_invariant) throw Error("H is not N0-invariant");
        if (s_order > 0 && !sym.s_invariant(s_order))
            throw Error("H is not invariant under S of order " + std::to_string(s_order));
        if (!(H->value(Vec::Zero(2 * n)) < lo))
            throw Error("the inner plateau {H <= " + format_double(lo) + "} does not cover a ball around 0");

        std::mt19937_64 rng(opt.seed);
        double r_in = std::numeric_limits<double>::infinity(), r_out = 0.0;
        for (int i = 0; i < 256; ++i) {
            const Vec d = sample_sphere(n, 1.0, rng);
            r_in = std::min(r_in, ray_crossing(*H, d, lo));
            r_out = std::max(r_out, ray_crossing(*H, d, hi));
        }
        r_in *= 0.95;
        r_out *= 1.05;
        for (int i = 0; i < 400; ++i) {
            if (!(H->value(sample_ball(n, r_in, rng)) < lo)) throw Error("sublevel {H < lo} is not star-shaped enough");
            const Vec d = sample_sphere(n, 1.0, rng);
            const double r = r_out * (1.0 + 2.0 * std::uniform_real_distribution<double>()(rng));
            if (!(H->value(r * d) >= hi)) throw Error("H falls below hi outside the enclosing ball");
        }

        const double R = 1.1 * r_out;
        const double C = kPi * R * R + opt.extension_eps + opt.plateau_margin;
        auto f = std::make_shared<WindowProfile>(lo, hi, C);
        auto F = std::make_shared<ComposedModel>(H, f, r_out, C, r_in, opt.seed);
        const ExtendedPtr Hbar = extend(F, QuadraticForm(n, 1.0, R), opt.extension_eps);

        MinimaxProblem p = make_problem(Hbar, opt.kmax, s_order, opt.seed);
        p.directions = opt.directions;
        p.s_grid = opt.s_grid;
        p.threads = opt.threads;
        const MinimaxResult r = minimax_search(p);
        e.critical_value = r.c_value;
        if (!r.converged) throw Error("minimax: " + r.status);

        const BrakeOrbit bar = loop_to_orbit(r.x, Hbar, 0, s_order, opt.tol);
        const Localization loc = localize_check(bar, *Hbar, opt.tol);
        e.localized = loc.inside;
        if (!loc.inside) throw Error("orbit leaves E_K (max q = " + format_double(loc.max_q) + ")");
        e.window_orbit = *loc.base_orbit;
        if (e.window_orbit.constant) throw Error("critical point is a constant loop");
        if (!e.window_orbit.verified) throw Error("orbit of f(H) unverified: " + e.window_orbit.diagnostics);

        e.lambda = H->value(evaluate_at(r.x, 0.0));
        e.tau = f->d1(e.lambda);
        if (!(std::abs(e.tau) > 1e-12)) throw Error("f'(lambda) vanishes at lambda = " + format_double(e.lambda));
        e.orbit = loop_to_orbit(r.x, H, 0, s_order, opt.tol, e.tau);
        if (!(lo < e.lambda && e.lambda < hi)) throw Error("energy " + format_double(e.lambda) + " outside the window");
        if (!e.orbit.verified) throw Error("rescaled orbit unverified: " + e.orbit.diagnostics);
        e.found = true;
        e.status = "ok";
    } catch (const Error& err) {
        e.status = err.what();
    }
    return e;
}

namespace {

std::vector<SweepEntry> run_windows(ModelPtr H, const std::vector<std::pair<double, double>>& windows, int s_order,
                                    const SweepOptions& opt) {
    std::vector<SweepEntry> out(windows.size());
    SweepOptions inner = opt;
    if (windows.size() > 1) inner.threads = 1;
    parallel_for(windows.size(), opt.threads,
                 [&](std::size_t i) { out[i] = window_orbit(H, windows[i].first, windows[i].second, s_order, inner); });
    return out;
}

}  // namespace

std::vector<SweepEntry> energy_sweep(ModelPtr H, double level, const std::vector<double>& eps_list,
                                     const SweepOptions& opt) {
    std::vector<std::pair<double, double>> w;
    for (double eps : eps_list) {
        if (!(eps > 0.0)) throw Error("sweep eps must be positive");
        w.emplace_back(level - eps, level);
    }
    return run_windows(std::move(H), w, 0, opt);
}

std::vector<SweepEntry> s_symmetric_sweep(ModelPtr H, int m, double M, const std::vector<double>& eps_list,
                                          const SweepOptions& opt) {
    if (m < 1) throw Error("S order must be positive");
    std::vector<std::pair<double, double>> w;
    for (double eps : eps_list) {
        if (!(eps > 0.0)) throw Error("sweep eps must be positive");
        w.emplace_back(M, M + eps);
    }
    return run_windows(std::move(H), w, m, opt);
}

namespace {

// alpha_eps(X_H)(z) = first + eps * second.
std::pair<double, double> alpha_parts(const HamiltonianModel& H, const Vec& z) {
    const int n = H.n();
    const Vec x = z.head(n);
    const Vec v = H.hamiltonian_field(z);
    Vec z0 = Vec::Zero(2 * n);
    z0.tail(n) = z.tail(n);
    const Vec gy0 = H.gradient(z0).tail(n);
    const Mat hyy0 = H.hessian(z0).bottomRightCorner(n, n);
    return {-x.dot(v.tail(n)), gy0.dot(v.head(n)) + x.dot(hyy0 * v.tail(n))};
}

}  // namespace

double alpha_eps_on_field(const HamiltonianModel& H, const Vec& z, double eps) {
    const auto [a, b] = alpha_parts(H, z);
    return a + eps * b;
}

std::vector<Vec> sample_level_set(const HamiltonianModel& H, double level, double box, int count, unsigned seed) {
    const int n = H.n();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-box, box);
    std::vector<Vec> out;
    for (long attempt = 0; attempt < 50L * count && static_cast<int>(out.size()) < count; ++attempt) {
        Vec z(2 * n);
        for (int i = 0; i < 2 * n; ++i) z(i) = u(rng);
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            const double h = H.value(z) - level;
            if (std::abs(h) < 1e-13 * (1.0 + std::abs(level))) {
                ok = true;
                break;
            }
            const Vec g = H.gradient(z);
            const double gg = g.squaredNorm();
            if (!(gg > 1e-300)) break;
            z -= (h / gg) * g;
        }
        if (ok && z.cwiseAbs().maxCoeff() <= 2.0 * box) out.push_back(z);
    }
    return out;
}

ContactCertificate contact_certify(const HamiltonianModel& H, double level, const ContactOptions& opt) {
    const int n = H.n();
    ContactCertificate c;
    c.level = level;
    std::mt19937_64 rng(opt.seed);

    double box = opt.box;
    if (box <= 0.0) {
        box = 1.0;
        for (;;) {
            bool above = true;
            for (int i = 0; i < 200 && above; ++i) above = H.value(sample_sphere(n, box, rng)) > level;
            if (above) break;
            box *= 2.0;
            if (box > 1e6) throw Error("level set is not bounded");
        }
    }

    const std::vector<Vec> pts = sample_level_set(H, level, box, opt.samples, opt.seed + 1);
    if (pts.empty()) throw Error("no points found on H = " + format_double(level));
    c.samples = static_cast<int>(pts.size());

    std::vector<Vec> probes = pts;
    std::uniform_real_distribution<double> u(-box, box);
    for (int i = 0; i < 2000; ++i) {
        Vec z(2 * n);
        for (int j = 0; j < 2 * n; ++j) z(j) = u(rng);
        probes.push_back(z);
    }
    for (const Vec& z : probes) {
        const double h = H.value(z);
        if (std::abs(H.value(apply_N0(z)) - h) > 1e-12 * (1.0 + std::abs(h)))
            throw Error("H is not N0-invariant at witness " + vec_text(z));
        const Vec x = z.head(n);
        if (x.norm() > 1e-9 && !(H.gradient(z).head(n).dot(x) > 0.0))
            throw Error("<d_x H, x> > 0 fails at witness " + vec_text(z));
    }

    c.min_grad = std::numeric_limits<double>::infinity();
    for (const Vec& z : pts) {
        const double g = H.gradient(z).norm();
        if (g < c.min_grad) c.min_grad = g;
        if (g < 1e-8) throw Error("degenerate level set: dH = 0 near witness " + vec_text(z));
    }

    double sup0 = -std::numeric_limits<double>::infinity();
    std::uniform_real_distribution<double> uy(-4.0 * box, 4.0 * box);
    for (int i = 0; i < 2000; ++i) {
        Vec z = Vec::Zero(2 * n);
        for (int j = 0; j < n; ++j) z(n + j) = uy(rng);
        sup0 = std::max(sup0, H.value(z));
    }
    if (!(level < sup0))
        throw Error("level " + format_double(level) + " is not below sup_y H(0, y) ~ " + format_double(sup0));

    c.star_margin = std::numeric_limits<double>::infinity();
    for (const Vec& z : pts) {
        const Vec g = H.gradient(z);
        const double d = z.norm() * g.norm();
        c.star_margin = std::min(c.star_margin, d > 0.0 ? z.dot(g) / d : -1.0);
    }
    c.star_shaped = c.star_margin > 0.0;

    std::vector<std::pair<double, double>> parts;
    for (const Vec& z : pts) parts.push_back(alpha_parts(H, z));
    for (int k = 0; k < opt.eps_points; ++k) {
        const double t = opt.eps_points > 1 ? static_cast<double>(k) / (opt.eps_points - 1) : 0.0;
        const double eps = opt.eps_min * std::pow(opt.eps_max / opt.eps_min, t);
        double mx = -std::numeric_limits<double>::infinity();
        for (const auto& [a, b] : parts) mx = std::max(mx, a + eps * b);
        if (mx < 0.0) {
            c.valid = true;
            c.method = "alpha_eps";
            c.eps = eps;
            c.max_alpha = mx;
            c.margin = -mx;
            return c;
        }
    }
    if (c.star_shaped) {
        c.valid = true;
        c.method = "liouville";
        c.margin = c.star_margin;
        return c;
    }
    throw Error("no eps on the grid gives alpha_eps(X_H) < 0 and the level is not star-shaped");
}

void write_orbit_csv(std::ostream& os, const BrakeOrbit& orbit) {
    os << "t";
    for (Eigen::Index j = 0; j < orbit.trajectory.cols(); ++j) os << ",x" << j + 1;
    os << '\n';
    for (Eigen::Index i = 0; i < orbit.trajectory.rows(); ++i) {
        os << format_double(orbit.time(static_cast<int>(i)));
        for (Eigen::Index j = 0; j < orbit.trajectory.cols(); ++j) os << ',' << format_double(orbit.trajectory(i, j));
        os << '\n';
    }
}

Mat read_orbit_csv(std::istream& is, double* period) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,", 0) != 0) throw Error("orbit CSV must start with a t,x1,... header");
    const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(parse_double(cell));
        if (static_cast<Eigen::Index>(r.size()) != cols + 1)
            throw Error("orbit CSV row has " + std::to_string(r.size()) + " fields, expected " + std::to_string(cols + 1));
        rows.push_back(std::move(r));
    }
    if (rows.size() < 3) throw Error("orbit CSV needs at least 3 rows");
    Mat S(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (Eigen::Index j = 0; j < cols; ++j) S(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j) + 1];
    if (period) *period = (rows[1][0] - rows[0][0]) * static_cast<double>(rows.size());
    return S;
}

nlohmann::json to_json(const OrbitResiduals& r) {
    nlohmann::json j = {{"ode", r.ode},
                        {"symmetry", r.symmetry},
                        {"energy_drift", r.energy_drift},
                        {"coefficients", r.coefficients},
                        {"grad_sup", r.grad_sup},
                        {"excursion", r.excursion}};
    if (r.s_symmetry) j["s_symmetry"] = *r.s_symmetry;
    return j;
}

nlohmann::json orbit_metadata(const BrakeOrbit& o) {
    return {{"period", o.period},
            {"tau", o.tau},
            {"energy", o.energy},
            {"action", o.action},
            {"s_order", o.s_order},
            {"samples", o.trajectory.rows()},
            {"kmax", o.loop.kmax()},
            {"hamiltonian", o.hamiltonian},
            {"verified", o.verified},
            {"constant", o.constant},
            {"diagnostics", o.diagnostics},
            {"residuals", to_json(o.residuals)}};
}

std::string to_text(const ContactCertificate& c) {
    std::ostringstream os;
    os << "level = " << format_double(c.level) << '\n'
       << "valid = " << (c.valid ? "true" : "false") << '\n'
       << "method = " << c.method << '\n'
       << "eps = " << format_double(c.eps) << '\n'
       << "max_alpha = " << format_double(c.max_alpha) << '\n'
       << "margin = " << format_double(c.margin) << '\n'
       << "star_shaped = " << (c.star_shaped ? "true" : "false") << '\n'
       << "star_margin = " << format_double(c.star_margin) << '\n'
       << "samples = " << c.samples << '\n'
       << "min_grad = " << format_double(c.min_grad) << '\n'
       << "field = F(x, y) = <x, d_y H(0, y)>\n";
    if (!c.detail.empty()) os << "detail = " << c.detail << '\n';
    return os.str();
}

}  // namespace brake
