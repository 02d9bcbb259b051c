#include "brake/hamiltonian.hpp"

#include "json.hpp"

#include <algorithm>
#include <sstream>

namespace brake {

double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double smoothstep_d1(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return 30.0 * u * u * (1.0 - u) * (1.0 - u);
}

double smoothstep_d2(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
}

double smoothstep_integral(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return u - 0.5;
    const double u4 = u * u * u * u;
    return u4 * (u * u - 3.0 * u + 2.5);
}

RampProfile::RampProfile(double s0, double s1, double low, double high) : s0_(s0), s1_(s1), low_(low), high_(high) {
    if (!(s1 > s0)) throw Error("ramp profile needs s1 > s0");
}

double RampProfile::value(double s) const { return low_ + (high_ - low_) * smoothstep((s - s0_) / (s1_ - s0_)); }

double RampProfile::d1(double s) const {
    const double w = s1_ - s0_;
    return (high_ - low_) * smoothstep_d1((s - s0_) / w) / w;
}

double RampProfile::d2(double s) const {
    const double w = s1_ - s0_;
    return (high_ - low_) * smoothstep_d2((s - s0_) / w) / (w * w);
}

PolynomialProfile::PolynomialProfile(std::vector<double> coeffs) : a_(std::move(coeffs)) {
    if (a_.empty()) a_.push_back(0.0);
}

double PolynomialProfile::value(double s) const {
    double v = 0.0;
    for (auto it = a_.rbegin(); it != a_.rend(); ++it) v = v * s + *it;
    return v;
}

double PolynomialProfile::d1(double s) const {
    double v = 0.0;
    for (std::size_t k = a_.size(); k-- > 1;) v = v * s + static_cast<double>(k) * a_[k];
    return v;
}

double PolynomialProfile::d2(double s) const {
    double v = 0.0;
    for (std::size_t k = a_.size(); k-- > 2;) v = v * s + static_cast<double>(k * (k - 1)) * a_[k];
    return v;
}

bool Symmetry::s_invariant(int m) const {
    return std::any_of(s_orders.begin(), s_orders.end(), [m](int o) { return o == 0 || o == m; });
}

Mat HamiltonianModel::hessian(const Vec& z) const {
    const Eigen::Index d = z.size();
    Mat Hs(d, d);
    const double h = 1e-5 * (1.0 + z.norm());
    for (Eigen::Index i = 0; i < d; ++i) {
        Vec zp = z, zm = z;
        zp(i) += h;
        zm(i) -= h;
        Hs.col(i) = (gradient(zp) - gradient(zm)) / (2.0 * h);
    }
    return 0.5 * (Hs + Hs.transpose());
}

QuadraticForm::QuadraticForm(int n, double K, double radius) : n_(n), K_(K), radius_(radius) {
    if (n <= 0) throw Error("quadratic form needs n > 0");
    if (!(K >= 1.0)) throw Error("quadratic form needs K >= 1");
    if (!(radius > 0.0)) throw Error("quadratic form needs a positive radius");
}

double QuadraticForm::weight(int j) const {
    const double base = (j == 0) ? 1.0 : 1.0 / (K_ * K_);
    return base / (radius_ * radius_);
}

double QuadraticForm::min_weight() const { return n_ == 1 ? weight(0) : weight(1); }

double QuadraticForm::value(const Vec& z) const {
    double v = 0.0;
    for (int j = 0; j < n_; ++j) v += weight(j) * (z(j) * z(j) + z(n_ + j) * z(n_ + j));
    return v;
}

Vec QuadraticForm::gradient(const Vec& z) const {
    Vec g(2 * n_);
    for (int j = 0; j < n_; ++j) {
        g(j) = 2.0 * weight(j) * z(j);
        g(n_ + j) = 2.0 * weight(j) * z(n_ + j);
    }
    return g;
}

QuadraticModel::QuadraticModel(QuadraticForm q, double c) : q_(q), c_(c) {}

Mat QuadraticModel::hessian(const Vec&) const {
    const int n = q_.n();
    Mat Hs = Mat::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) Hs(j, j) = Hs(n + j, n + j) = 2.0 * c_ * q_.weight(j);
    return Hs;
}

double QuadraticModel::grad_lipschitz() const { return 2.0 * std::abs(c_) * q_.weight(0); }

RadialModel::RadialModel(int n, ProfilePtr h, std::string name, Vec center, std::optional<double> plateau,
                         std::optional<double> vanish, double lipschitz_smax)
    : n_(n), h_(std::move(h)), name_(std::move(name)), center_(std::move(center)), plateau_(plateau),
      vanish_(vanish) {
    if (center_.size() == 0) center_ = Vec::Zero(2 * n);
    if (center_.size() != 2 * n) throw Error("radial model center has wrong dimension");
    // Hessian eigenvalues are 2h'(s) and 2h'(s) + 4 s h''(s)
    lipschitz_ = 0.0;
    const int samples = 4000;
    for (int i = 0; i <= samples; ++i) {
        const double s = lipschitz_smax * i / samples;
        lipschitz_ = std::max(lipschitz_, std::abs(2.0 * h_->d1(s)));
        lipschitz_ = std::max(lipschitz_, std::abs(2.0 * h_->d1(s) + 4.0 * s * h_->d2(s)));
    }
    lipschitz_ *= 1.05;
}

double RadialModel::value(const Vec& z) const { return h_->value((z - center_).squaredNorm()); }

Vec RadialModel::gradient(const Vec& z) const {
    const Vec d = z - center_;
    return 2.0 * h_->d1(d.squaredNorm()) * d;
}

Mat RadialModel::hessian(const Vec& z) const {
    const Vec d = z - center_;
    const double s = d.squaredNorm();
    return 2.0 * h_->d1(s) * Mat::Identity(2 * n_, 2 * n_) + 4.0 * h_->d2(s) * d * d.transpose();
}

Symmetry RadialModel::symmetry() const {
    Symmetry sym;
    sym.n0_invariant = center_.head(n_).isZero(0.0);
    if (center_.isZero(0.0)) sym.s_orders = {0};
    return sym;
}

namespace {

/// H = sum a_j x_j^2 + sum b_j y_j^2 + w (|y|^2 - 1)^2 + kappa |x|^2 |y|^2 + mu |x|^4.
class QuarticModel : public HamiltonianModel {
public:
    QuarticModel(std::string name, Vec a, Vec b, double well, double kappa, double mu, double lip_radius)
        : name_(std::move(name)), a_(std::move(a)), b_(std::move(b)), w_(well), kappa_(kappa), mu_(mu) {
        n_ = static_cast<int>(a_.size());
        if (b_.size() != n_) throw Error(name_ + ": coefficient vectors differ in length");
        std::mt19937_64 rng(7);
        lip_ = 0.0;
        for (int i = 0; i < 400; ++i) {
            const Vec z = sample_ball(n_, lip_radius, rng);
            Eigen::SelfAdjointEigenSolver<Mat> es(hessian(z));
            lip_ = std::max(lip_, es.eigenvalues().cwiseAbs().maxCoeff());
        }
        lip_ *= 1.1;
    }
    int n() const override { return n_; }
    double value(const Vec& z) const override {
        const Vec x = z.head(n_), y = z.tail(n_);
        const double xx = x.squaredNorm(), yy = y.squaredNorm();
        return (a_.array() * x.array().square()).sum() + (b_.array() * y.array().square()).sum() +
               w_ * (yy - 1.0) * (yy - 1.0) + kappa_ * xx * yy + mu_ * xx * xx;
    }
    Vec gradient(const Vec& z) const override {
        const Vec x = z.head(n_), y = z.tail(n_);
        const double xx = x.squaredNorm(), yy = y.squaredNorm();
        Vec g(2 * n_);
        g.head(n_) = 2.0 * a_.cwiseProduct(x) + (2.0 * kappa_ * yy + 4.0 * mu_ * xx) * x;
        g.tail(n_) = 2.0 * b_.cwiseProduct(y) + (4.0 * w_ * (yy - 1.0) + 2.0 * kappa_ * xx) * y;
        return g;
    }
    Mat hessian(const Vec& z) const override {
        const Vec x = z.head(n_), y = z.tail(n_);
        const double xx = x.squaredNorm(), yy = y.squaredNorm();
        const Mat I = Mat::Identity(n_, n_);
        Mat Hs(2 * n_, 2 * n_);
        Hs.topLeftCorner(n_, n_) = Mat(2.0 * a_.asDiagonal()) + (2.0 * kappa_ * yy + 4.0 * mu_ * xx) * I +
                                   8.0 * mu_ * x * x.transpose();
        Hs.bottomRightCorner(n_, n_) = Mat(2.0 * b_.asDiagonal()) + (4.0 * w_ * (yy - 1.0) + 2.0 * kappa_ * xx) * I +
                                       8.0 * w_ * y * y.transpose();
        Hs.topRightCorner(n_, n_) = 4.0 * kappa_ * x * y.transpose();
        Hs.bottomLeftCorner(n_, n_) = Hs.topRightCorner(n_, n_).transpose();
        return Hs;
    }
    double grad_lipschitz() const override { return lip_; }
    Symmetry symmetry() const override {
        Symmetry sym;
        sym.n0_invariant = true;
        const bool round = w_ == 0.0 && kappa_ == 0.0 && mu_ == 0.0 && (a_.array() == a_(0)).all() &&
                           (b_.array() == a_(0)).all();
        if (round) sym.s_orders = {0};
        return sym;
    }
    std::string name() const override { return name_; }

private:
    std::string name_;
    int n_ = 0;
    Vec a_, b_;
    double w_, kappa_, mu_;
    double lip_ = 0.0;
};

/// H(theta, y) = |y|^2 / 2 + sum_j v_j (1 - cos theta_j) on T^*(T^n), written in
/// the chart R^n x R^n with the theta-part in the x-slot.
class TorusKineticModel : public HamiltonianModel {
public:
    explicit TorusKineticModel(Vec v) : v_(std::move(v)) { n_ = static_cast<int>(v_.size()); }
    int n() const override { return n_; }
    double value(const Vec& z) const override {
        double V = 0.0;
        for (int j = 0; j < n_; ++j) V += v_(j) * (1.0 - std::cos(z(j)));
        return 0.5 * z.tail(n_).squaredNorm() + V;
    }
    Vec gradient(const Vec& z) const override {
        Vec g(2 * n_);
        for (int j = 0; j < n_; ++j) g(j) = v_(j) * std::sin(z(j));
        g.tail(n_) = z.tail(n_);
        return g;
    }
    Mat hessian(const Vec& z) const override {
        Mat Hs = Mat::Zero(2 * n_, 2 * n_);
        for (int j = 0; j < n_; ++j) {
            Hs(j, j) = v_(j) * std::cos(z(j));
            Hs(n_ + j, n_ + j) = 1.0;
        }
        return Hs;
    }
    double grad_lipschitz() const override { return std::max(1.0, v_.cwiseAbs().maxCoeff()); }
    Symmetry symmetry() const override { return {true, {}}; }
    std::string name() const override { return "torus_kinetic"; }

private:
    int n_ = 0;
    Vec v_;
};

Vec broadcast(const std::vector<double>& v, int n, const std::string& what) {
    if (v.size() == 1) return Vec::Constant(n, v[0]);
    if (static_cast<int>(v.size()) != n) throw Error(what + " needs 1 or n values");
    return Eigen::Map<const Vec>(v.data(), n);
}

}  // namespace

double ModelSpec::number(const std::string& key, double fallback) const {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    try {
        return parse_double(it->second);
    } catch (const Error&) {
        throw Error("parameter '" + key + "' of model " + name + " is not a number: " + it->second);
    }
}

int ModelSpec::integer(const std::string& key, int fallback) const {
    const double v = number(key, fallback);
    if (v != std::floor(v)) throw Error("parameter '" + key + "' must be an integer");
    return static_cast<int>(v);
}

std::vector<double> ModelSpec::numbers(const std::string& key, std::vector<double> fallback) const {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    std::vector<double> out;
    std::string tok;
    std::istringstream is(it->second);
    while (std::getline(is, tok, ',')) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        if (!tok.empty()) out.push_back(parse_double(tok));
    }
    return out;
}

ModelPtr builtin(const ModelSpec& spec) {
    const int n = spec.integer("n", 1);
    if (n <= 0) throw Error("model dimension n must be positive");
    const std::string& name = spec.name;
    if (name == "quadratic_Q") {
        const double eps = spec.number("eps", 0.25);
        const QuadraticForm q(n, spec.number("K", 1.0), spec.number("radius", 1.0));
        return std::make_shared<QuadraticModel>(q, kPi * q.radius() * q.radius() + eps);
    }
    if (name == "radial_bump") {
        const double m = spec.number("m", kPi + 0.5);
        const double r0 = spec.number("r0", 0.2);
        const double r1 = spec.number("r1", 0.9);
        if (!(0.0 < r0 && r0 < r1)) throw Error("radial_bump needs 0 < r0 < r1");
        Vec center = Vec::Zero(2 * n);
        const auto c = spec.numbers("center", {});
        if (!c.empty()) center = broadcast(c, 2 * n, "center");
        auto h = std::make_shared<RampProfile>(r0 * r0, r1 * r1, 0.0, m);
        return std::make_shared<RadialModel>(n, h, name, center, m, center.isZero(0.0) ? std::optional(r0) : std::nullopt,
                                             r1 * r1 * 1.01);
    }
    if (name == "s_symmetric_radial") {
        const double a = spec.number("a", 1.0);
        const double b = spec.number("b", 0.0);
        const double smax = spec.number("lip_smax", 4.0);
        auto h = std::make_shared<PolynomialProfile>(std::vector<double>{0.0, a, b});
        return std::make_shared<RadialModel>(n, h, name, Vec{}, std::nullopt, std::nullopt, smax);
    }
    if (name == "ellipsoid_level" || name == "pinched_star") {
        const bool pinched = name == "pinched_star";
        const Vec a = broadcast(spec.numbers("a", {1.0}), n, "a");
        const Vec b = broadcast(spec.numbers("b", {pinched ? 2.0 : 1.0}), n, "b");
        return std::make_shared<QuarticModel>(name, a, b, spec.number("well", 0.0),
                                              spec.number("kappa", pinched ? 0.5 : 0.0), spec.number("mu", 0.0),
                                              spec.number("lip_radius", 3.0));
    }
    if (name == "torus_kinetic") {
        return std::make_shared<TorusKineticModel>(broadcast(spec.numbers("v", {0.0}), n, "v"));
    }
    throw Error("unknown model '" + name + "'");
}

ModelPtr builtin(const std::string& name, int n, const std::map<std::string, double>& params) {
    ModelSpec spec{name, {}};
    spec.params["n"] = std::to_string(n);
    for (const auto& [k, v] : params) spec.params[k] = format_double(v);
    return builtin(spec);
}

Vec sample_ball(int n, double r, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec z(2 * n);
    for (int i = 0; i < 2 * n; ++i) z(i) = g(rng);
    return z * (r * std::pow(u(rng), 1.0 / (2 * n)) / z.norm());
}

Vec sample_sphere(int n, double r, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec z(2 * n);
    for (int i = 0; i < 2 * n; ++i) z(i) = g(rng);
    return z * (r / z.norm());
}

DomainSampler ball_sampler(int n, double r, double r_collar, double r_vanish, const Vec& o_center, int count,
                           std::mt19937_64& rng) {
    DomainSampler s;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < count; ++i) {
        s.interior.push_back(sample_ball(n, r, rng));
        const double rad = r_collar + (r - r_collar) * u(rng);
        s.collar.push_back(sample_sphere(n, rad, rng));
        s.vanishing_set.push_back(o_center + sample_ball(n, r_vanish, rng));
    }
    s.vanishing_set.push_back(o_center);
    return s;
}

bool AdmissibilityReport::all_pass() const {
    return std::all_of(items.begin(), items.end(), [](const Item& i) { return i.pass; });
}

const AdmissibilityReport::Item& AdmissibilityReport::get(const std::string& property) const {
    for (const auto& i : items)
        if (i.property == property) return i;
    throw Error("no admissibility item " + property);
}

std::string AdmissibilityReport::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& i : items) {
        nlohmann::json e{{"property", i.property}, {"pass", i.pass}, {"detail", i.detail}};
        if (i.witness) e["witness"] = std::vector<double>(i.witness->data(), i.witness->data() + i.witness->size());
        j.push_back(e);
    }
    return j.dump(2);
}

AdmissibilityReport check_admissible_class(const HamiltonianModel& H, const DomainSampler& sampler,
                                           std::optional<int> s_order) {
    const std::string p = s_order ? "HS" : "H";
    constexpr double tol = 1e-12;
    AdmissibilityReport rep;
    const auto plateau = H.plateau();

    AdmissibilityReport::Item h1{p + "1", true, "", std::nullopt};
    if (!plateau) {
        h1.pass = false;
        h1.detail = "model has no plateau value";
        if (!sampler.collar.empty()) h1.witness = sampler.collar.front();
    } else {
        for (const auto& z : sampler.collar) {
            if (std::abs(H.value(z) - *plateau) > tol * (1.0 + *plateau)) {
                h1.pass = false;
                h1.detail = "H differs from m(H) in the boundary collar";
                h1.witness = z;
                break;
            }
        }
    }
    rep.items.push_back(h1);

    AdmissibilityReport::Item h2{p + "2", true, "", std::nullopt};
    bool touches = false;
    for (const auto& z : sampler.vanishing_set) {
        if (std::abs(H.value(z)) > tol) {
            h2.pass = false;
            h2.detail = "H does not vanish on O";
            h2.witness = z;
            break;
        }
        const int n = half_dim(z);
        if (s_order ? z.isZero(0.0) : z.head(n).isZero(0.0)) touches = true;
    }
    if (h2.pass && !touches) {
        h2.pass = false;
        h2.detail = s_order ? "O does not contain the origin" : "O does not meet L0";
    }
    rep.items.push_back(h2);

    AdmissibilityReport::Item h3{p + "3", true, "", std::nullopt};
    for (const auto& z : sampler.interior) {
        const double v = H.value(z);
        const double top = plateau.value_or(std::numeric_limits<double>::infinity());
        if (v < -tol || v > top + tol * (1.0 + std::abs(top))) {
            h3.pass = false;
            h3.detail = "H leaves [0, m(H)]";
            h3.witness = z;
            break;
        }
    }
    rep.items.push_back(h3);

    AdmissibilityReport::Item h4{p + "4", true, "", std::nullopt};
    for (const auto& z : sampler.interior) {
        const double v = H.value(z);
        if (std::abs(H.value(apply_N0(z)) - v) > tol * (1.0 + std::abs(v))) {
            h4.pass = false;
            h4.detail = "H(N0 z) != H(z)";
            h4.witness = z;
            break;
        }
        if (s_order && std::abs(H.value(rotate(z, kTwoPi / *s_order)) - v) > 1e-10 * (1.0 + std::abs(v))) {
            h4.pass = false;
            h4.detail = "H(S z) != H(z)";
            h4.witness = z;
            break;
        }
    }
    rep.items.push_back(h4);
    return rep;
}

double gradient_fd_error(const HamiltonianModel& H, const std::vector<Vec>& points, double step) {
    double worst = 0.0;
    for (const auto& z : points) {
        const Vec g = H.gradient(z);
        Vec fd(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            Vec zp = z, zm = z;
            zp(i) += step;
            zm(i) -= step;
            fd(i) = (H.value(zp) - H.value(zm)) / (2.0 * step);
        }
        worst = std::max(worst, (g - fd).norm() / (1.0 + g.norm()));
    }
    return worst;
}

}  // namespace brake
