#include "brake/capacity.hpp"
#include "brake/parallel.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <sstream>

namespace brake {

namespace {

QuadraticForm domain_form(const DomainSpec& d) {
    switch (d.kind) {
        case DomainKind::ball: return QuadraticForm(d.n, 1.0, d.r);
        case DomainKind::cylinder: return QuadraticForm(d.n, std::max(d.K, 6.0), d.r);
        case DomainKind::ellipsoid: return QuadraticForm(d.n, d.K, d.r);
        case DomainKind::torus_product: break;
    }
    throw Error("no quadratic form for " + d.label());
}

double max_weight(const QuadraticForm& q) {
    double w = 0.0;
    for (int j = 0; j < q.n(); ++j) w = std::max(w, q.weight(j));
    return w;
}

/// h = 0 below q0, m above q1, slope c = m / (L (1 - theta)) in between
/// with smoothstep shoulders of width theta L.
class TrapezoidProfile : public Profile {
public:
    TrapezoidProfile(double q0, double q1, double theta, double m)
        : q0_(q0), q1_(q1), w_(theta * (q1 - q0)), c_(m / ((q1 - q0) * (1.0 - theta))) {}
    double value(double s) const override {
        return c_ * w_ * (smoothstep_integral((s - q0_) / w_) - smoothstep_integral((s - q1_ + w_) / w_));
    }
    double d1(double s) const override {
        return c_ * (smoothstep((s - q0_) / w_) - smoothstep((s - q1_ + w_) / w_));
    }
    double d2(double s) const override {
        return c_ / w_ * (smoothstep_d1((s - q0_) / w_) - smoothstep_d1((s - q1_ + w_) / w_));
    }
    double slope() const { return c_; }

private:
    double q0_, q1_, w_, c_;
};

class PlateauModel : public HamiltonianModel {
public:
    PlateauModel(QuadraticForm q, double m, double q0, double q1, double theta, std::string label)
        : q_(std::move(q)), h_(q0, q1, theta, m), m_(m), label_(std::move(label)) {
        const double wmax = max_weight(q_);
        vanish_ = std::sqrt(q0 / wmax);
        for (int i = 0; i <= 4000; ++i) {
            const double s = q1 * i / 4000.0;
            M_ = std::max(M_, 2.0 * wmax * std::abs(h_.d1(s)) + 4.0 * wmax * s * std::abs(h_.d2(s)));
        }
        M_ *= 1.05;
    }
    int n() const override { return q_.n(); }
    double value(const Vec& z) const override { return h_.value(q_.value(z)); }
    Vec gradient(const Vec& z) const override { return h_.d1(q_.value(z)) * q_.gradient(z); }
    Mat hessian(const Vec& z) const override {
        const double s = q_.value(z);
        const Vec g = q_.gradient(z);
        Mat Hs = h_.d2(s) * g * g.transpose();
        const int n = q_.n();
        for (int j = 0; j < n; ++j) {
            Hs(j, j) += 2.0 * q_.weight(j) * h_.d1(s);
            Hs(n + j, n + j) += 2.0 * q_.weight(j) * h_.d1(s);
        }
        return Hs;
    }
    double grad_lipschitz() const override { return M_; }
    std::optional<double> plateau() const override { return m_; }
    std::optional<double> vanish_radius() const override { return vanish_; }
    Symmetry symmetry() const override { return {true, {0}}; }
    std::string name() const override { return "plateau(" + label_ + ", m=" + format_double(m_) + ")"; }

private:
    QuadraticForm q_;
    TrapezoidProfile h_;
    double m_;
    std::string label_;
    double vanish_ = 0.0;
    double M_ = 0.0;
};

}  // namespace

std::string DomainSpec::label() const {
    std::ostringstream os;
    switch (kind) {
        case DomainKind::ball: os << "ball(" << format_double(r) << ")"; break;
        case DomainKind::cylinder: os << "Z(" << format_double(r) << ")"; break;
        case DomainKind::ellipsoid: os << "E(" << format_double(r) << ",K=" << format_double(K) << ")"; break;
        case DomainKind::torus_product: os << "torus(" << format_double(r) << ",n=" << n << ")"; break;
    }
    return os.str();
}

bool DomainSpec::contains(const Vec& z) const {
    switch (kind) {
        case DomainKind::ball: return z.squaredNorm() < r * r;
        case DomainKind::cylinder: return z(0) * z(0) + z(n) * z(n) < r * r;
        case DomainKind::ellipsoid: return QuadraticForm(n, K, r).value(z) < 1.0;
        case DomainKind::torus_product: return (z.tail(n).array().abs() < r).all();
    }
    return false;
}

Vec DomainSpec::apply_symmetry(const Vec& z) const {
    if (kind == DomainKind::torus_product) {
        Vec out = z;
        out.head(n) = -z.head(n);
        return out;
    }
    return symmetry == DomainSymmetry::N1 ? apply_N1(z) : apply_N0(z);
}

DomainKind parse_domain_kind(const std::string& s) {
    if (s == "ball") return DomainKind::ball;
    if (s == "cylinder" || s == "Z") return DomainKind::cylinder;
    if (s == "ellipsoid") return DomainKind::ellipsoid;
    if (s == "torus") return DomainKind::torus_product;
    throw Error("unknown domain '" + s + "'");
}

DomainSymmetry parse_domain_symmetry(const std::string& s) {
    if (s == "N0") return DomainSymmetry::N0;
    if (s == "N1") return DomainSymmetry::N1;
    if (s == "N0S" || s == "N0+S") return DomainSymmetry::N0S;
    throw Error("unknown symmetry '" + s + "'");
}

bool symmetric_membership(const DomainSpec& d, int samples, unsigned seed, Vec* witness) {
    if (d.symmetry == DomainSymmetry::N0S && d.m < 1) throw Error("N0S needs an order m >= 1");
    std::mt19937_64 rng(seed);
    const double half = d.kind == DomainKind::ellipsoid ? 2.0 * d.r * std::max(1.0, d.K) : 2.0 * d.r;
    std::uniform_real_distribution<double> box(-half, half), angle(0.0, kTwoPi);
    Vec z(2 * d.n);
    for (int i = 0; i < samples; ++i) {
        for (int k = 0; k < 2 * d.n; ++k) z(k) = box(rng);
        if (d.kind == DomainKind::torus_product)
            for (int j = 0; j < d.n; ++j) z(j) = angle(rng);
        bool ok = d.contains(z) == d.contains(d.apply_symmetry(z));
        if (ok && d.symmetry == DomainSymmetry::N0S) ok = d.contains(z) == d.contains(rotate(z, kTwoPi / d.m));
        if (!ok) {
            if (witness) *witness = z;
            return false;
        }
    }
    return true;
}

std::optional<ReferenceValue> reference_value(const DomainSpec& d) {
    switch (d.kind) {
        case DomainKind::ball: return ReferenceValue{kPi * d.r * d.r, false, "pi r^2 (ball)"};
        case DomainKind::cylinder: return ReferenceValue{kPi * d.r * d.r, false, "pi r^2 (cylinder)"};
        case DomainKind::ellipsoid:
            return ReferenceValue{kPi * d.r * d.r * std::min(1.0, d.K * d.K), false, "pi r^2 (smallest axis)"};
        case DomainKind::torus_product: return ReferenceValue{5.0 * d.r * kPi, true, "5 a pi (embedding bound)"};
    }
    return std::nullopt;
}

PlateauFamily::PlateauFamily(const DomainSpec& d) : d_(d), q_(domain_form(d)) {}

ModelPtr PlateauFamily::member(double m) const {
    return std::make_shared<PlateauModel>(q_, m, q0, q1, theta, d_.label());
}

double PlateauFamily::fast_ratio(double m) const {
    return max_weight(q_) * TrapezoidProfile(q0, q1, theta, m).slope() / kPi;
}

std::string to_string(LevelOutcome o) {
    switch (o) {
        case LevelOutcome::orbit: return "orbit";
        case LevelOutcome::none: return "none";
        case LevelOutcome::inconclusive: return "inconclusive";
    }
    return "?";
}

LevelRecord probe_level(const PlateauFamily& family, const DomainSpec&, double m, const OnsetOptions& opt) {
    LevelRecord rec;
    rec.m = m;
    rec.fast_ratio = family.fast_ratio(m);
    const double rho = family.form().radius();
    const double threshold = kPi * rho * rho;
    if (m > threshold * (1.0 + 1e-12)) {
        try {
            const double eps = std::min(0.25 * rho * rho, 0.5 * (m - threshold));
            const ExtendedPtr Hbar = extend(family.member(m), family.form(), eps);
            MinimaxProblem p = make_problem(Hbar, opt.kmax, 0, opt.seed);
            p.directions = opt.directions;
            p.s_grid = opt.s_grid;
            p.threads = 1;
            const MinimaxResult r = minimax_search(p);
            rec.critical_value = r.c_value;
            if (!r.converged) throw Error("minimax: " + r.status);
            const BrakeOrbit bar = loop_to_orbit(r.x, Hbar, 0, 0, opt.tol);
            const Localization loc = localize_check(bar, *Hbar, opt.tol);
            if (!loc.inside) throw Error("orbit leaves the domain (max q = " + format_double(loc.max_q) + ")");
            if (loc.base_orbit->constant) throw Error("critical point is a constant loop");
            if (!loc.base_orbit->verified) throw Error("orbit unverified: " + loc.base_orbit->diagnostics);
            rec.outcome = LevelOutcome::orbit;
            rec.period = 1.0;
            rec.detail = "minimax orbit, c = " + format_double(r.c_value);
        } catch (const Error& e) {
            rec.outcome = LevelOutcome::inconclusive;
            rec.detail = e.what();
        }
    } else if (rec.fast_ratio < 1.0) {
        rec.outcome = LevelOutcome::none;
        rec.detail = "integrable flow, max w h' / pi = " + format_double(rec.fast_ratio);
    } else {
        rec.outcome = LevelOutcome::inconclusive;
        rec.detail = "below the extension threshold and the family member has fast circles";
    }
    return rec;
}

CapacityEstimate onset_probe(const DomainSpec& d, const OnsetOptions& opt) {
    CapacityEstimate est;
    est.domain = d;
    est.seed = opt.seed;
    est.reference = reference_value(d);
    const PlateauFamily family(d);

    std::vector<double> grid = opt.grid;
    if (grid.empty()) {
        if (!est.reference) throw Error("no starting grid and no reference value for " + d.label());
        grid = {0.7 * est.reference->value, 1.3 * est.reference->value};
    }
    std::sort(grid.begin(), grid.end());
    double width = opt.width;
    if (!(width > 0.0)) width = 0.1 * (est.reference ? est.reference->value : grid.back() - grid.front());

    auto evaluate = [&](const std::vector<double>& levels) {
        std::vector<LevelRecord> out(levels.size());
        parallel_for(levels.size(), opt.threads, [&](std::size_t i) { out[i] = probe_level(family, d, levels[i], opt); });
        est.levels.insert(est.levels.end(), out.begin(), out.end());
        std::sort(est.levels.begin(), est.levels.end(), [](const LevelRecord& a, const LevelRecord& b) { return a.m < b.m; });
    };
    auto update = [&] {
        est.lower.reset();
        est.upper.reset();
        for (const LevelRecord& r : est.levels) {
            if (r.outcome == LevelOutcome::none) est.lower = std::max(est.lower.value_or(r.m), r.m);
            if (r.outcome == LevelOutcome::orbit) est.upper = std::min(est.upper.value_or(r.m), r.m);
        }
    };

    evaluate(grid);
    update();
    for (int round = 0; round < opt.max_rounds && est.lower && est.upper && *est.lower < *est.upper; ++round) {
        const double lo = *est.lower, hi = *est.upper;
        if (hi - lo <= width) break;
        double gl = hi, gh = lo;
        for (const LevelRecord& r : est.levels)
            if (r.m > lo && r.m < hi) {
                gl = std::min(gl, r.m);
                gh = std::max(gh, r.m);
            }
        std::vector<double> next;
        if (gl > gh) {
            next.push_back(0.5 * (lo + hi));
        } else {
            if (gl - lo > 0.25 * width) next.push_back(0.5 * (lo + gl));
            if (hi - gh > 0.25 * width) next.push_back(0.5 * (gh + hi));
        }
        if (next.empty()) break;
        evaluate(next);
        update();
    }

    for (const LevelRecord& r : est.levels)
        if (r.outcome == LevelOutcome::inconclusive && (!est.lower || r.m > *est.lower) &&
            (!est.upper || r.m < *est.upper))
            est.gaps.push_back(r.m);
    if (est.lower && est.upper)
        est.status = est.ordered() ? "bracket" : "inconsistent: lower evidence above upper evidence";
    else if (est.lower)
        est.status = "lower evidence only";
    else if (est.upper)
        est.status = "upper evidence only";
    else
        est.status = "no evidence";
    return est;
}

TorusEmbedding::TorusEmbedding(double a, int n) : a_(a), n_(n) {
    if (!(a > 0.0) || n < 1) throw Error("torus embedding needs a > 0 and n >= 1");
}

Vec TorusEmbedding::map(const Vec& p) const {
    Vec z(2 * n_);
    for (int j = 0; j < n_; ++j) {
        const double rho = std::sqrt(3.0 * a_ - 2.0 * p(n_ + j));
        z(j) = rho * std::cos(p(j));
        z(n_ + j) = rho * std::sin(p(j));
    }
    return z;
}

Vec TorusEmbedding::torus_involution(const Vec& p) const {
    Vec out = p;
    out.head(n_) = -p.head(n_);
    return out;
}

Vec TorusEmbedding::sample(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> angle(0.0, kTwoPi), fiber(-a_, a_);
    Vec p(2 * n_);
    for (int j = 0; j < n_; ++j) {
        p(j) = angle(rng);
        double r = fiber(rng);
        while (std::abs(r) >= a_) r = fiber(rng);
        p(n_ + j) = r;
    }
    return p;
}

double TorusEmbedding::pullback_residual(int samples, unsigned seed) const {
    std::mt19937_64 rng(seed);
    const int d = 2 * n_;
    Mat W = Mat::Zero(d, d);
    W.topRightCorner(n_, n_) = -Mat::Identity(n_, n_);
    W.bottomLeftCorner(n_, n_) = Mat::Identity(n_, n_);
    const double h = 1e-3 * std::min(1.0, a_);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Vec p = sample(rng);
        Mat D(d, d);
        for (int k = 0; k < d; ++k) {
            Vec e = Vec::Zero(d);
            e(k) = h;
            D.col(k) = (-map(p + 2 * e) + 8.0 * map(p + e) - 8.0 * map(p - e) + map(p - 2 * e)) / (12.0 * h);
        }
        worst = std::max(worst, (D.transpose() * W * D - W).cwiseAbs().maxCoeff());
    }
    return worst;
}

double TorusEmbedding::equivariance_residual(int samples, unsigned seed) const {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Vec p = sample(rng);
        worst = std::max(worst, (map(torus_involution(p)) - apply_N1(map(p))).cwiseAbs().maxCoeff());
    }
    return worst;
}

bool TorusEmbedding::image_in_annuli(int samples, unsigned seed) const {
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) {
        const Vec z = map(sample(rng));
        for (int j = 0; j < n_; ++j) {
            const double r2 = z(j) * z(j) + z(n_ + j) * z(n_ + j);
            if (!(a_ < r2 && r2 < 5.0 * a_)) return false;
        }
    }
    return true;
}

bool TorusEmbedding::image_in(const DomainSpec& d, int samples, unsigned seed) const {
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s)
        if (!d.contains(map(sample(rng)))) return false;
    return true;
}

TorusEmbedding torus_embedding(double a, int n) { return TorusEmbedding(a, n); }

namespace {

double lower_of(const CapacityEstimate& e) {
    if (e.lower) return *e.lower;
    if (e.reference) return e.reference->value;
    return 0.0;
}

double upper_of(const CapacityEstimate& e) {
    if (e.upper) return *e.upper;
    if (e.reference) return e.reference->value;
    return std::numeric_limits<double>::infinity();
}

}  // namespace

AuditReport monotonicity_audit(const CapacityEstimate& inner, const CapacityEstimate& outer, int samples,
                               unsigned seed) {
    AuditReport a;
    a.inner = inner.domain.label();
    a.outer = outer.domain.label();
    a.embedding = "identity";
    const DomainSpec& U = inner.domain;
    a.embedding_ok = U.n == outer.domain.n && U.symmetry == outer.domain.symmetry &&
                     U.kind != DomainKind::torus_product && outer.domain.kind != DomainKind::torus_product;
    if (a.embedding_ok) {
        std::mt19937_64 rng(seed);
        const double half = U.kind == DomainKind::ellipsoid ? U.r * std::max(1.0, U.K) : U.kind == DomainKind::cylinder ? 2.0 * U.r : U.r;
        std::uniform_real_distribution<double> box(-half, half);
        Vec z(2 * U.n);
        int hits = 0;
        for (int s = 0; s < samples && a.embedding_ok; ++s) {
            for (int k = 0; k < z.size(); ++k) z(k) = box(rng);
            if (!U.contains(z)) continue;
            ++hits;
            if (!outer.domain.contains(z)) {
                a.embedding_ok = false;
                a.detail = "sampled point of the inner domain lies outside the outer domain";
            }
        }
        if (a.embedding_ok && hits == 0) {
            a.embedding_ok = false;
            a.detail = "no sampled point fell in the inner domain";
        }
    } else {
        a.detail = "dimensions or symmetries differ";
    }
    a.inner_lower = lower_of(inner);
    a.outer_upper = upper_of(outer);
    a.holds = a.embedding_ok && a.inner_lower <= a.outer_upper * (1.0 + 1e-12);
    if (a.embedding_ok && !a.holds) a.detail = "lower evidence of the inner domain exceeds the outer upper evidence";
    return a;
}

AuditReport monotonicity_audit(const CapacityEstimate& torus, const CapacityEstimate& outer,
                               const TorusEmbedding& phi, int samples, unsigned seed) {
    AuditReport a;
    a.inner = torus.domain.label();
    a.outer = outer.domain.label();
    a.embedding = "Phi(theta, r) = (3a - 2r)^{1/2} e^{i theta}";
    const double pull = phi.pullback_residual(std::max(1, samples / 10), seed);
    const double equi = phi.equivariance_residual(samples, seed);
    const bool inside = phi.image_in(outer.domain, samples, seed);
    const bool sym = outer.domain.symmetry == DomainSymmetry::N1;
    a.embedding_ok = torus.domain.kind == DomainKind::torus_product && phi.n() == outer.domain.n && pull < 1e-10 &&
                     equi < 1e-12 && inside && sym;
    std::ostringstream os;
    os << "pullback " << format_double(pull) << ", equivariance " << format_double(equi)
       << ", image inside " << (inside ? "yes" : "no") << ", outer symmetry N1 " << (sym ? "yes" : "no");
    a.detail = os.str();
    a.inner_lower = lower_of(torus);
    a.outer_upper = upper_of(outer);
    a.holds = a.embedding_ok && a.inner_lower <= a.outer_upper * (1.0 + 1e-12);
    return a;
}

nlohmann::json to_json(const DomainSpec& d) {
    static const char* kinds[] = {"ball", "cylinder", "ellipsoid", "torus"};
    static const char* syms[] = {"N0", "N1", "N0S"};
    nlohmann::json j = {{"label", d.label()},
                        {"kind", kinds[static_cast<int>(d.kind)]},
                        {"n", d.n},
                        {"r", d.r},
                        {"symmetry", syms[static_cast<int>(d.symmetry)]}};
    if (d.kind == DomainKind::ellipsoid) j["K"] = d.K;
    if (d.symmetry == DomainSymmetry::N0S) j["m"] = d.m;
    return j;
}

nlohmann::json to_json(const CapacityEstimate& e) {
    nlohmann::json j = {{"domain", to_json(e.domain)}, {"family", e.family}, {"seed", e.seed}, {"status", e.status}};
    j["lower"] = e.lower ? nlohmann::json(*e.lower) : nlohmann::json(nullptr);
    j["upper"] = e.upper ? nlohmann::json(*e.upper) : nlohmann::json(nullptr);
    if (e.reference)
        j["reference"] = {{"value", e.reference->value}, {"upper_bound", e.reference->upper_bound},
                          {"source", e.reference->source}};
    else
        j["reference"] = nullptr;
    j["gaps"] = e.gaps;
    j["levels"] = nlohmann::json::array();
    for (const LevelRecord& r : e.levels)
        j["levels"].push_back({{"m", r.m},
                               {"outcome", to_string(r.outcome)},
                               {"fast_ratio", r.fast_ratio},
                               {"period", r.period},
                               {"critical_value", r.critical_value},
                               {"detail", r.detail}});
    return j;
}

nlohmann::json to_json(const AuditReport& a) {
    return {{"inner", a.inner},           {"outer", a.outer},     {"embedding", a.embedding},
            {"embedding_ok", a.embedding_ok}, {"holds", a.holds},  {"inner_lower", a.inner_lower},
            {"outer_upper", a.outer_upper}, {"detail", a.detail}};
}

DomainSpec domain_from_json(const nlohmann::json& j) {
    try {
        DomainSpec d;
        d.kind = parse_domain_kind(j.at("kind").get<std::string>());
        d.n = j.at("n").get<int>();
        d.r = j.at("r").get<double>();
        d.K = j.value("K", 1.0);
        d.symmetry = parse_domain_symmetry(j.at("symmetry").get<std::string>());
        d.m = j.value("m", 0);
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed domain record: ") + e.what());
    }
}

CapacityEstimate estimate_from_json(const nlohmann::json& j) {
    try {
        CapacityEstimate e;
        e.domain = domain_from_json(j.at("domain"));
        if (!j.at("lower").is_null()) e.lower = j["lower"].get<double>();
        if (!j.at("upper").is_null()) e.upper = j["upper"].get<double>();
        if (!j.at("reference").is_null()) {
            const auto& r = j["reference"];
            e.reference = ReferenceValue{r.at("value").get<double>(), r.at("upper_bound").get<bool>(),
                                         r.at("source").get<std::string>()};
        }
        e.gaps = j.value("gaps", std::vector<double>{});
        for (const auto& l : j.value("levels", nlohmann::json::array())) {
            LevelRecord r;
            r.m = l.at("m").get<double>();
            const std::string o = l.at("outcome").get<std::string>();
            r.outcome = o == "orbit" ? LevelOutcome::orbit : o == "none" ? LevelOutcome::none : LevelOutcome::inconclusive;
            r.fast_ratio = l.value("fast_ratio", 0.0);
            r.period = l.value("period", 0.0);
            r.critical_value = l.value("critical_value", 0.0);
            r.detail = l.value("detail", std::string());
            e.levels.push_back(r);
        }
        e.family = j.value("family", std::string("plateau"));
        e.seed = j.value("seed", 1u);
        e.status = j.value("status", std::string());
        return e;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed estimate record: ") + e.what());
    }
}

std::string render_report(const std::vector<CapacityEstimate>& estimates) {
    auto num = [](double v) {
        std::ostringstream t;
        t << std::setprecision(6) << v;
        return t.str();
    };
    auto cell = [&](const std::optional<double>& v) { return v ? num(*v) : std::string("-"); };
    std::ostringstream os;
    os << std::left << std::setw(24) << "domain" << std::setw(14) << "reference" << std::setw(14) << "lower"
       << std::setw(14) << "upper" << std::setw(14) << "margin"
       << "status\n";
    for (const CapacityEstimate& e : estimates) {
        std::string ref = "-", margin = "-";
        if (e.reference) {
            ref = num(e.reference->value) + (e.reference->upper_bound ? " (ub)" : "");
            if (e.lower && e.upper)
                margin = num(std::max(e.reference->value - *e.lower, *e.upper - e.reference->value));
        }
        os << std::setw(24) << e.domain.label() << std::setw(14) << ref << std::setw(14) << cell(e.lower)
           << std::setw(14) << cell(e.upper) << std::setw(14) << margin << e.status << "\n";
    }
    return os.str();
}

}  // namespace brake
