#include "tthjb/poly_basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tthjb {

namespace {

using Poly = std::vector<double>;

// Legendre polynomials P_0..P_n as monomial coefficient vectors in a variable y with s = c1*y + c0.
std::vector<Poly> legendre_polys(int n, double c1, double c0) {
    std::vector<Poly> P;
    P.push_back({1.0});
    if (n >= 1) P.push_back({c0, c1});
    for (int k = 1; k < n; ++k) {
        Poly next(std::size_t(k) + 2, 0.0);
        const Poly& pk = P[std::size_t(k)];
        const Poly& pm = P[std::size_t(k) - 1];
        for (std::size_t m = 0; m < pk.size(); ++m) {
            next[m] += (2 * k + 1) * c0 * pk[m];
            next[m + 1] += (2 * k + 1) * c1 * pk[m];
        }
        for (std::size_t m = 0; m < pm.size(); ++m) next[m] -= k * pm[m];
        for (double& v : next) v /= (k + 1);
        P.push_back(std::move(next));
    }
    return P;
}

Eigen::MatrixXd transform(int n, double a, double b, double c1, double c0) {
    const auto P = legendre_polys(n, c1, c0);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int al = 0; al <= n; ++al) {
        const double scale = std::sqrt((2.0 * al + 1.0) / (b - a));
        for (std::size_t m = 0; m < P[std::size_t(al)].size(); ++m) T(Eigen::Index(m), al) = scale * P[std::size_t(al)][m];
    }
    return T;
}

// Inverse of an upper triangular matrix by back substitution; exact zeros propagate.
Eigen::MatrixXd upper_inverse(const Eigen::MatrixXd& T) {
    const Eigen::Index n = T.rows();
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i >= 0; --i) {
            double acc = (i == j) ? 1.0 : 0.0;
            for (Eigen::Index k = i + 1; k <= j; ++k) acc -= T(i, k) * X(k, j);
            X(i, j) = acc / T(i, i);
        }
    }
    return X;
}

Eigen::MatrixXd shift_derivative(int n) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int k = 0; k < n; ++k) M(k, k + 1) = k + 1;
    return M;
}

Eigen::MatrixXd second_derivative(int n) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int k = 0; k + 2 <= n; ++k) M(k, k + 2) = double(k + 2) * double(k + 1);
    return M;
}

Eigen::MatrixXd euler_operator(int n) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int k = 0; k <= n; ++k) M(k, k) = k;
    return M;
}

} // namespace

LegendreBasis build_basis(double a, double b, int n) {
    if (!(a < b)) throw std::invalid_argument("interval must satisfy a < b");
    if (n < 0 || n > kMaxDegree)
        throw std::domain_error("degree " + std::to_string(n) + " outside [0, 12]: monomial transform too ill-conditioned");
    LegendreBasis B;
    B.a = a;
    B.b = b;
    B.n = n;
    B.T = transform(n, a, b, B.c1(), B.c0());
    B.T_inv = upper_inverse(B.T);
    B.Ts = transform(n, a, b, 1.0, 0.0);
    B.Ts_inv = upper_inverse(B.Ts);
    // In s: d/dx = c1 d/ds, d^2/dx^2 = c1^2 d^2/ds^2, x d/dx = (s - c0) d/ds.
    const double c1 = B.c1(), c0 = B.c0();
    const Eigen::MatrixXd Md = shift_derivative(n);
    Eigen::MatrixXd gen = c1 * c1 * second_derivative(n) + euler_operator(n);
    if (c0 != 0.0) gen -= c0 * Md;
    B.D = B.Ts_inv * gen * B.Ts;
    B.Dx = B.Ts_inv * (c1 * Md) * B.Ts;
    return B;
}

std::vector<double> LegendreBasis::from_monomials(std::span<const double> coefs) const {
    std::size_t deg = coefs.size();
    while (deg > 0 && coefs[deg - 1] == 0.0) --deg;
    if (deg > size()) throw std::domain_error("monomial degree exceeds basis degree");
    // Horner in s: x = u*s + w.
    const double u = 1.0 / c1(), w = -c0() / c1();
    Poly acc(size(), 0.0);
    for (std::size_t k = deg; k-- > 0;) {
        Poly next(size(), 0.0);
        for (std::size_t m = 0; m < size(); ++m) {
            if (acc[m] == 0.0) continue;
            next[m] += w * acc[m];
            if (m + 1 < size()) next[m + 1] += u * acc[m];
        }
        next[0] += coefs[k];
        acc = std::move(next);
    }
    Eigen::Map<const Eigen::VectorXd> sv(acc.data(), Eigen::Index(acc.size()));
    Eigen::VectorXd c = Ts_inv * sv;
    return {c.data(), c.data() + c.size()};
}

std::vector<double> LegendreBasis::to_monomials(std::span<const double> c) const {
    if (c.size() != size()) throw std::invalid_argument("coefficient vector has wrong length");
    Eigen::Map<const Eigen::VectorXd> cv(c.data(), Eigen::Index(c.size()));
    Eigen::VectorXd m = T * cv;
    return {m.data(), m.data() + m.size()};
}

void evaluate_basis_both(const LegendreBasis& basis, double x, std::span<double> values, std::span<double> derivs) {
    const int n = basis.n;
    const double s = basis.c1() * x + basis.c0();
    double pm = 1.0, p = s;       // P_{k-1}, P_k
    double dm = 0.0, dp = 1.0;    // P'_{k-1}, P'_k
    const double inv_len = 1.0 / (basis.b - basis.a);
    for (int k = 0; k <= n; ++k) {
        double Pk, dPk;
        if (k == 0) {
            Pk = 1.0;
            dPk = 0.0;
        } else if (k == 1) {
            Pk = s;
            dPk = 1.0;
        } else {
            // advance from (P_{k-2}, P_{k-1}) to P_k
            const double pn = ((2 * k - 1) * s * p - (k - 1) * pm) / k;
            const double dn = dm + (2 * k - 1) * p;
            pm = p;
            p = pn;
            dm = dp;
            dp = dn;
            Pk = pn;
            dPk = dn;
        }
        const double scale = std::sqrt((2.0 * k + 1.0) * inv_len);
        if (!values.empty()) values[std::size_t(k)] = scale * Pk;
        if (!derivs.empty()) derivs[std::size_t(k)] = scale * basis.c1() * dPk;
    }
}

std::vector<double> evaluate_basis(const LegendreBasis& basis, double x) {
    std::vector<double> v(basis.size());
    evaluate_basis_both(basis, x, v, {});
    return v;
}

std::vector<double> evaluate_basis_derivative(const LegendreBasis& basis, double x) {
    std::vector<double> v(basis.size());
    evaluate_basis_both(basis, x, {}, v);
    return v;
}

const Eigen::MatrixXd& ou_generator_matrix(const LegendreBasis& basis) { return basis.D; }
const Eigen::MatrixXd& derivative_matrix(const LegendreBasis& basis) { return basis.Dx; }

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int points) {
    if (points < 1) throw std::invalid_argument("need at least one quadrature point");
    std::vector<double> x(static_cast<std::size_t>(points)), w(static_cast<std::size_t>(points));
    const int m = points;
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= m; ++k) {
            const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = m * (z * p1 - p0) / (z * z - 1.0);
        x[std::size_t(i)] = -z;
        x[std::size_t(m - 1 - i)] = z;
        w[std::size_t(i)] = w[std::size_t(m - 1 - i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    if (m % 2 == 1) x[std::size_t(m / 2)] = 0.0;
    return {x, w};
}

PolySpace::PolySpace(std::vector<std::pair<double, double>> intervals, std::vector<int> degrees)
    : intervals_(std::move(intervals)), degrees_(std::move(degrees)) {
    if (intervals_.empty()) throw std::invalid_argument("polynomial space needs at least one dimension");
    if (intervals_.size() != degrees_.size()) throw std::invalid_argument("intervals and degrees differ in length");
    cache_.resize(intervals_.size());
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
        const auto [a, b] = intervals_[i];
        if (degrees_[i] < 0 || degrees_[i] > kMaxDegree)
            throw std::domain_error("degree of dimension " + std::to_string(i) + " outside [0, 12]");
        for (int n = 0; n <= kMaxDegree; ++n) cache_[i][std::size_t(n)] = build_basis(a, b, n);
    }
}

std::vector<std::size_t> PolySpace::mode_sizes() const {
    std::vector<std::size_t> m;
    for (int n : degrees_) m.push_back(std::size_t(n) + 1);
    return m;
}

const LegendreBasis& PolySpace::basis(std::size_t i, int degree) const {
    if (degree < 0 || degree > kMaxDegree)
        throw std::domain_error("degree " + std::to_string(degree) + " outside [0, 12]");
    return cache_.at(i)[std::size_t(degree)];
}

bool PolySpace::contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < x.size() && i < dims(); ++i)
        if (x[i] < intervals_[i].first || x[i] > intervals_[i].second) return false;
    return true;
}

} // namespace tthjb
