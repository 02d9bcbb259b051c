#include "brake/loop_space.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace brake {

FourierLoop::FourierLoop(int n, int kmax) : n_(n), kmax_(kmax), c_(Mat::Zero(2 * kmax + 1, n)) {
    if (n <= 0) throw Error("loop half-dimension must be positive");
    if (kmax < 0) throw Error("truncation order must be non-negative");
}

FourierLoop::FourierLoop(int n, int kmax, Mat coeffs) : FourierLoop(n, kmax) {
    if (coeffs.rows() != 2 * kmax + 1 || coeffs.cols() != n)
        throw Error("loop coefficient matrix has wrong shape");
    c_ = std::move(coeffs);
}

Vec FourierLoop::mode(int j) const {
    if (j < -kmax_ || j > kmax_) return Vec::Zero(n_);
    return c_.row(j + kmax_).transpose();
}

Vec FourierLoop::coefficient(int j) const {
    Vec out = Vec::Zero(2 * n_);
    out.tail(n_) = mode(j);
    return out;
}

Vec FourierLoop::flatten() const {
    Vec v(c_.size());
    for (int r = 0; r < c_.rows(); ++r)
        for (int i = 0; i < n_; ++i) v(r * n_ + i) = c_(r, i);
    return v;
}

FourierLoop FourierLoop::unflatten(int n, int kmax, const Vec& v) {
    if (v.size() != static_cast<Eigen::Index>(n) * (2 * kmax + 1))
        throw Error("flattened loop has wrong length");
    Mat c(2 * kmax + 1, n);
    for (int r = 0; r < c.rows(); ++r)
        for (int i = 0; i < n; ++i) c(r, i) = v(r * n + i);
    return FourierLoop(n, kmax, std::move(c));
}

namespace {

void require_same(const FourierLoop& a, const FourierLoop& b) {
    if (!a.same_shape(b)) throw Error("loops differ in dimension or truncation order");
}

}  // namespace

FourierLoop operator+(const FourierLoop& a, const FourierLoop& b) {
    require_same(a, b);
    return FourierLoop(a.n(), a.kmax(), a.coeffs() + b.coeffs());
}

FourierLoop operator-(const FourierLoop& a, const FourierLoop& b) {
    require_same(a, b);
    return FourierLoop(a.n(), a.kmax(), a.coeffs() - b.coeffs());
}

FourierLoop operator*(double s, const FourierLoop& a) {
    return FourierLoop(a.n(), a.kmax(), s * a.coeffs());
}

L2Loop::L2Loop(int n, int kmax) : n_(n), kmax_(kmax), c_(Mat::Zero(2 * kmax + 1, 2 * n)) {}

L2Loop::L2Loop(int n, int kmax, Mat coeffs) : L2Loop(n, kmax) {
    if (coeffs.rows() != 2 * kmax + 1 || coeffs.cols() != 2 * n)
        throw Error("L2 loop coefficient matrix has wrong shape");
    c_ = std::move(coeffs);
}

FourierLoop make_loop(int n, int kmax, const std::map<int, Vec>& coeffs) {
    FourierLoop out(n, kmax);
    Mat c = Mat::Zero(2 * kmax + 1, n);
    for (const auto& [j, v] : coeffs) {
        if (v.size() != 2 * n)
            throw Error("coefficient of mode " + std::to_string(j) + " has length " +
                        std::to_string(v.size()) + ", expected " + std::to_string(2 * n));
        if (j < -kmax || j > kmax)
            throw Error("mode " + std::to_string(j) + " exceeds truncation order");
        for (int i = 0; i < n; ++i)
            if (v(i) != 0.0)
                throw Error("coefficient of mode " + std::to_string(j) + " is not in L0");
        c.row(j + kmax) = v.tail(n).transpose();
    }
    return FourierLoop(n, kmax, std::move(c));
}

SpectralGrid::SpectralGrid(int kmax, int num_samples)
    : kmax_(kmax), N_(num_samples), cos_(num_samples, 2 * kmax + 1), sin_(num_samples, 2 * kmax + 1) {
    if (num_samples < 2 * kmax + 1)
        throw Error("sample count " + std::to_string(num_samples) + " below Nyquist bound " +
                    std::to_string(2 * kmax + 1));
    for (int i = 0; i < N_; ++i) {
        for (int j = -kmax; j <= kmax; ++j) {
            // reduce j*i mod N before scaling to keep the phase exact
            const long long p = (static_cast<long long>(j) * i) % N_;
            const double th = kTwoPi * static_cast<double>(p) / N_;
            cos_(i, j + kmax) = std::cos(th);
            sin_(i, j + kmax) = std::sin(th);
        }
    }
}

Mat SpectralGrid::evaluate(const FourierLoop& x) const {
    if (x.kmax() != kmax_) throw Error("grid and loop truncation orders differ");
    const int n = x.n();
    Mat out(N_, 2 * n);
    out.leftCols(n).noalias() = -sin_ * x.coeffs();
    out.rightCols(n).noalias() = cos_ * x.coeffs();
    return out;
}

Mat SpectralGrid::velocity(const FourierLoop& x) const {
    if (x.kmax() != kmax_) throw Error("grid and loop truncation orders differ");
    const int n = x.n();
    Mat scaled = x.coeffs();
    for (int j = -kmax_; j <= kmax_; ++j) scaled.row(j + kmax_) *= kTwoPi * j;
    Mat out(N_, 2 * n);
    out.leftCols(n).noalias() = -cos_ * scaled;
    out.rightCols(n).noalias() = -sin_ * scaled;
    return out;
}

L2Loop SpectralGrid::transform(const Mat& samples) const {
    if (samples.rows() != N_ || samples.cols() % 2 != 0) throw Error("sample matrix has wrong shape");
    const int n = static_cast<int>(samples.cols() / 2);
    const auto gx = samples.leftCols(n);
    const auto gy = samples.rightCols(n);
    // a_k = mean_i (gx + i gy) e^{-2 pi i k t_i}
    Mat c(2 * kmax_ + 1, 2 * n);
    c.leftCols(n).noalias() = (cos_.transpose() * gx + sin_.transpose() * gy) / N_;
    c.rightCols(n).noalias() = (cos_.transpose() * gy - sin_.transpose() * gx) / N_;
    return L2Loop(n, kmax_, std::move(c));
}

Mat SpectralGrid::transform_L0(const Mat& samples) const {
    if (samples.rows() != N_ || samples.cols() % 2 != 0) throw Error("sample matrix has wrong shape");
    const int n = static_cast<int>(samples.cols() / 2);
    Mat c(2 * kmax_ + 1, n);
    c.noalias() = cos_.transpose() * samples.rightCols(n);
    c.noalias() -= sin_.transpose() * samples.leftCols(n);
    c /= N_;
    return c;
}

Mat evaluate(const FourierLoop& x, int num_samples) {
    return SpectralGrid(x.kmax(), num_samples).evaluate(x);
}

Mat evaluate_velocity(const FourierLoop& x, int num_samples) {
    return SpectralGrid(x.kmax(), num_samples).velocity(x);
}

Vec evaluate_at(const FourierLoop& x, double t) {
    const int n = x.n();
    Vec out = Vec::Zero(2 * n);
    for (int j = -x.kmax(); j <= x.kmax(); ++j) {
        const double th = kTwoPi * j * t;
        out.head(n) -= std::sin(th) * x.mode(j);
        out.tail(n) += std::cos(th) * x.mode(j);
    }
    return out;
}

Vec velocity_at(const FourierLoop& x, double t) {
    const int n = x.n();
    Vec out = Vec::Zero(2 * n);
    for (int j = -x.kmax(); j <= x.kmax(); ++j) {
        const double th = kTwoPi * j * t;
        out.head(n) -= kTwoPi * j * std::cos(th) * x.mode(j);
        out.tail(n) -= kTwoPi * j * std::sin(th) * x.mode(j);
    }
    return out;
}

FourierLoop project(const FourierLoop& x, Sector sector) {
    Mat c = Mat::Zero(x.num_modes(), x.n());
    const int K = x.kmax();
    switch (sector) {
        case Sector::plus:
            c.bottomRows(K) = x.coeffs().bottomRows(K);
            break;
        case Sector::minus:
            c.topRows(K) = x.coeffs().topRows(K);
            break;
        case Sector::zero:
            c.row(K) = x.coeffs().row(K);
            break;
    }
    return FourierLoop(x.n(), K, std::move(c));
}

double mode_weight(int k, Sobolev s) {
    switch (s) {
        case Sobolev::L2:
            return 1.0;
        case Sobolev::Half:
            return k == 0 ? 1.0 : kTwoPi * std::abs(k);
        case Sobolev::One:
            return k == 0 ? 1.0 : kTwoPi * static_cast<double>(k) * k;
    }
    return 1.0;
}

double inner(const FourierLoop& a, const FourierLoop& b, Sobolev s) {
    require_same(a, b);
    double sum = 0.0;
    for (int k = -a.kmax(); k <= a.kmax(); ++k) {
        const int r = k + a.kmax();
        sum += mode_weight(k, s) * a.coeffs().row(r).dot(b.coeffs().row(r));
    }
    return sum;
}

double norm(const FourierLoop& a, Sobolev s) { return std::sqrt(inner(a, a, s)); }

double inner(const L2Loop& a, const L2Loop& b) {
    if (a.n() != b.n() || a.kmax() != b.kmax()) throw Error("L2 loops differ in shape");
    return (a.coeffs().array() * b.coeffs().array()).sum();
}

double norm(const L2Loop& a) { return std::sqrt(inner(a, a)); }

L2Loop embed(const FourierLoop& x) {
    Mat c = Mat::Zero(x.num_modes(), 2 * x.n());
    c.rightCols(x.n()) = x.coeffs();
    return L2Loop(x.n(), x.kmax(), std::move(c));
}

FourierLoop adjoint_embed(const L2Loop& y) {
    const int n = y.n();
    const int K = y.kmax();
    Mat c = y.coeffs().rightCols(n);
    for (int k = -K; k <= K; ++k)
        if (k != 0) c.row(k + K) /= kTwoPi * std::abs(k);
    return FourierLoop(n, K, std::move(c));
}

FourierLoop s_symmetry_project(const FourierLoop& x, int m) {
    if (m < 2) throw Error("symmetry order m must be at least 2");
    Mat c = x.coeffs();
    for (int j = -x.kmax(); j <= x.kmax(); ++j) {
        const int r = ((j - 1) % m + m) % m;
        if (r != 0) c.row(j + x.kmax()).setZero();
    }
    return FourierLoop(x.n(), x.kmax(), std::move(c));
}

FourierLoop resize(const FourierLoop& x, int kmax) {
    Mat c = Mat::Zero(2 * kmax + 1, x.n());
    const int K = std::min(kmax, x.kmax());
    for (int j = -K; j <= K; ++j) c.row(j + kmax) = x.coeffs().row(j + x.kmax());
    return FourierLoop(x.n(), kmax, std::move(c));
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("cannot format double");
    return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw Error("cannot parse number '" + s + "'");
    return v;
}

void write_loop(std::ostream& os, const FourierLoop& x) {
    os << "loop " << x.n() << ' ' << x.kmax() << '\n';
    for (int j = -x.kmax(); j <= x.kmax(); ++j) {
        os << j;
        const Vec v = x.coefficient(j);
        for (int i = 0; i < v.size(); ++i) os << ' ' << format_double(v(i));
        os << '\n';
    }
}

FourierLoop read_loop(std::istream& is) {
    std::string tag;
    int n = 0, kmax = 0;
    if (!(is >> tag >> n >> kmax) || tag != "loop") throw Error("malformed loop header");
    if (n <= 0 || kmax < 0) throw Error("invalid loop header values");
    std::map<int, Vec> coeffs;
    for (int row = 0; row < 2 * kmax + 1; ++row) {
        int j = 0;
        if (!(is >> j)) throw Error("truncated loop record at row " + std::to_string(row));
        Vec v(2 * n);
        for (int i = 0; i < 2 * n; ++i) {
            std::string tok;
            if (!(is >> tok)) throw Error("truncated loop record at mode " + std::to_string(j));
            v(i) = parse_double(tok);
        }
        if (coeffs.count(j)) throw Error("duplicate mode " + std::to_string(j));
        coeffs[j] = v;
    }
    return make_loop(n, kmax, coeffs);
}

std::string to_string(const FourierLoop& x) {
    std::ostringstream os;
    write_loop(os, x);
    return os.str();
}

FourierLoop loop_from_string(const std::string& s) {
    std::istringstream is(s);
    return read_loop(is);
}

}  // namespace brake
