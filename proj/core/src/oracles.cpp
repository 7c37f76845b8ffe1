#include "tthjb/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace tthjb {

namespace {

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& sizes) {
    std::vector<std::size_t> s(sizes.size(), 1);
    for (std::size_t i = sizes.size(); i-- > 1;) s[i - 1] = s[i] * sizes[i];
    return s;
}

void check_dense_size(const std::vector<std::size_t>& sizes) {
    std::size_t n = 1;
    for (auto s : sizes) {
        if (s != 0 && n > kMaxDenseEntries / s) throw ShapeError("dense oracle tensor too large");
        n *= s;
    }
    if (n > kMaxDenseEntries) throw ShapeError("dense oracle tensor too large");
}

int degree_of_mode(std::size_t size) { return int(size) - 1; }

// Operators on coefficients of s^0..s^n, s = c1 x + c0 the variable mapped to [-1, 1].
Eigen::MatrixXd mono_derivative(std::size_t size, double c1) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(Eigen::Index(size), Eigen::Index(size));
    for (std::size_t k = 0; k + 1 < size; ++k) m(Eigen::Index(k), Eigen::Index(k + 1)) = c1 * double(k + 1);
    return m;
}

// d^2/dx^2 + x d/dx = c1^2 d^2/ds^2 + (s - c0) d/ds
Eigen::MatrixXd mono_generator(std::size_t size, double c1, double c0) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(Eigen::Index(size), Eigen::Index(size));
    for (std::size_t k = 0; k < size; ++k) {
        m(Eigen::Index(k), Eigen::Index(k)) = double(k);
        if (k + 1 < size) m(Eigen::Index(k), Eigen::Index(k + 1)) = -c0 * double(k + 1);
        if (k + 2 < size) m(Eigen::Index(k), Eigen::Index(k + 2)) = c1 * c1 * double((k + 2) * (k + 1));
    }
    return m;
}

// Legendre -> s-monomial map from point values at Chebyshev nodes: V^{-1} P.
Eigen::MatrixXd legendre_to_mono(const LegendreBasis& B) {
    const auto n = Eigen::Index(B.size());
    Eigen::MatrixXd P(n, n), V(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double s = std::cos(std::numbers::pi * (double(k) + 0.5) / double(n));
        const auto vals = evaluate_basis(B, (s - B.c0()) / B.c1());
        for (Eigen::Index a = 0; a < n; ++a) {
            P(k, a) = vals[std::size_t(a)];
            V(k, a) = std::pow(s, double(a));
        }
    }
    return V.fullPivLu().solve(P);
}

DenseTensor add(DenseTensor a, const DenseTensor& b, double c = 1.0) {
    if (a.mode_sizes != b.mode_sizes) throw ShapeError("dense tensors differ in shape");
    for (std::size_t k = 0; k < a.size(); ++k) a.entries[k] += c * b.entries[k];
    return a;
}

// Product of two polynomials given by monomial coefficient tensors.
DenseTensor mono_convolve(const DenseTensor& a, const DenseTensor& b) {
    const std::size_t d = a.mode_sizes.size();
    if (b.mode_sizes.size() != d) throw ShapeError("dense tensors differ in dimension");
    std::vector<std::size_t> out_sizes(d);
    for (std::size_t i = 0; i < d; ++i) out_sizes[i] = a.mode_sizes[i] + b.mode_sizes[i] - 1;
    check_dense_size(out_sizes);
    DenseTensor out(out_sizes);
    const auto sa = strides_of(a.mode_sizes), sb = strides_of(b.mode_sizes), so = strides_of(out_sizes);
    for (std::size_t p = 0; p < a.size(); ++p) {
        const double ap = a.entries[p];
        if (ap == 0.0) continue;
        for (std::size_t q = 0; q < b.size(); ++q) {
            const double bq = b.entries[q];
            if (bq == 0.0) continue;
            std::size_t o = 0;
            for (std::size_t i = 0; i < d; ++i) {
                const std::size_t ia = (p / sa[i]) % a.mode_sizes[i];
                const std::size_t ib = (q / sb[i]) % b.mode_sizes[i];
                o += (ia + ib) * so[i];
            }
            out.entries[o] += ap * bq;
        }
    }
    return out;
}

struct Bond {
    std::size_t k, d;

    bool first() const { return k == 0; }
    bool last() const { return k == d; }
    bool left() const { return k <= d - k; }
    bool has_one() const { return !last(); }
    bool has_q() const { return !first(); }
    std::size_t size() const { return first() || last() ? 1 : 2 + (left() ? k : d - k); }
    std::size_t one() const { return 0; }
    std::size_t x(std::size_t j) const { return 1 + j; }
    std::size_t l(std::size_t j) const { return 1 + (j - k); }
    std::size_t q() const { return size() - 1; }
};

} // namespace

Eigen::MatrixXd riccati_reference(const Eigen::MatrixXd& Q0, double t) {
    if (Q0.rows() != Q0.cols() || Q0.rows() == 0) throw std::invalid_argument("Q0 must be a square matrix");
    if (!(t >= 0.0)) throw std::invalid_argument("t must be non-negative");
    const double scale = std::max(1.0, Q0.cwiseAbs().maxCoeff());
    if ((Q0 - Q0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("Q0 is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(Q0);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("Q0 is not positive definite");
    const Eigen::Index d = Q0.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd C0 = 0.5 * llt.solve(I);
    const double e = std::exp(-2.0 * t);
    const Eigen::MatrixXd Ct = e * C0 + (1.0 - e) * I;
    Eigen::MatrixXd Qt = 0.5 * Ct.llt().solve(I);
    return 0.5 * (Qt + Qt.transpose());
}

double gaussian_eigen_bound(std::span<const double> a_diag) {
    double s = 0.0;
    for (double a : a_diag) s += std::abs(1.0 - 2.0 * a);
    return 2.0 * s;
}

std::vector<std::size_t> quadratic_rank_bound(std::size_t d) {
    std::vector<std::size_t> r;
    for (std::size_t k = 1; k < d; ++k) r.push_back(2 + std::min(k, d - k));
    return r;
}

TensorTrain quadratic_tt_cores(const Eigen::MatrixXd& M, const PolySpace& space) {
    const std::size_t d = space.dims();
    if (M.rows() != Eigen::Index(d) || M.cols() != Eigen::Index(d)) throw ShapeError("matrix does not match the space");
    const Eigen::MatrixXd S = 0.5 * (M + M.transpose());
    std::vector<Core> cores;
    for (std::size_t i = 0; i < d; ++i) {
        const Bond prev{i, d}, next{i + 1, d};
        Core g(prev.size(), 3, next.size());
        const auto I = Eigen::Index(i);
        if (next.has_one()) g(prev.one(), 0, next.one()) = 1.0;
        if (next.has_one() && next.left()) {
            for (std::size_t j = 0; j < i; ++j) g(prev.x(j), 0, next.x(j)) = 1.0;
            g(prev.one(), 1, next.x(i)) = 1.0;
        } else if (next.has_one()) {
            for (std::size_t j = i + 1; j < d; ++j) {
                const auto J = Eigen::Index(j);
                if (prev.left() && !prev.first())
                    for (std::size_t l = 0; l < i; ++l) g(prev.x(l), 0, next.l(j)) = 2.0 * S(Eigen::Index(l), J);
                else if (!prev.first())
                    g(prev.l(j), 0, next.l(j)) = 1.0;
                g(prev.one(), 1, next.l(j)) += 2.0 * S(I, J);
            }
        }
        if (prev.has_q()) g(prev.q(), 0, next.q()) = 1.0;
        g(prev.one(), 2, next.q()) += S(I, I);
        if (prev.left() && !prev.first())
            for (std::size_t l = 0; l < i; ++l) g(prev.x(l), 1, next.q()) += 2.0 * S(Eigen::Index(l), I);
        else if (!prev.first())
            g(prev.l(i), 1, next.q()) += 1.0;

        const LegendreBasis& B = space.basis(i);
        if (B.n < 2) throw std::domain_error("quadratic needs degree >= 2 in every dimension");
        Core c(g.left, B.size(), g.right);
        for (std::size_t a = 0; a < g.left; ++a)
            for (std::size_t b = 0; b < g.right; ++b) {
                const double fiber[3] = {g(a, 0, b), g(a, 1, b), g(a, 2, b)};
                const auto leg = B.from_monomials(fiber);
                for (std::size_t m = 0; m < B.size(); ++m) c(a, m, b) = leg[m];
            }
        cores.push_back(std::move(c));
    }
    return TensorTrain(std::move(cores));
}

double hopf_cole_check(double q0, double t) {
    auto q = [&](double s) {
        const Eigen::MatrixXd Q0 = Eigen::MatrixXd::Constant(1, 1, q0);
        return riccati_reference(Q0, s)(0, 0);
    };
    const double h = std::min(1e-4, 0.5 * t);
    const double qt = q(t);
    const double dq = h > 0.0 ? (q(t + h) - q(t - h)) / (2.0 * h) : (q(1e-4) - qt) / 1e-4;
    return std::abs(dq - (2.0 * qt - 4.0 * qt * qt));
}

QuadratureScore2d::QuadratureScore2d(const PotentialSpec& spec, int Q,
                                     const std::array<std::pair<double, double>, 2>& domain) {
    if (Q < 2) throw std::invalid_argument("quadrature order must be at least 2");
    const SparsePoly phi = expand_potential(spec, 2);
    const auto [nodes, weights] = gauss_legendre(Q);
    for (int i = 0; i < Q; ++i)
        for (int j = 0; j < Q; ++j) {
            const auto [a0, b0] = domain[0];
            const auto [a1, b1] = domain[1];
            const std::array<double, 2> x{0.5 * (b0 - a0) * nodes[std::size_t(i)] + 0.5 * (a0 + b0),
                                          0.5 * (b1 - a1) * nodes[std::size_t(j)] + 0.5 * (a1 + b1)};
            const double w = 0.25 * (b0 - a0) * (b1 - a1) * weights[std::size_t(i)] * weights[std::size_t(j)];
            nodes_.push_back(x);
            log_weights_.push_back(std::log(w) - evaluate_poly(phi, x));
        }
}

ScoreValue QuadratureScore2d::operator()(double t, std::span<const double> x) const {
    if (!(t > 0.0)) throw std::invalid_argument("quadrature score needs t > 0");
    if (x.size() != 2) throw ShapeError("quadrature score is two-dimensional");
    const double e = std::exp(-t);
    const double s = -std::expm1(-2.0 * t);
    std::vector<double> logs(nodes_.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const double r0 = x[0] - e * nodes_[k][0], r1 = x[1] - e * nodes_[k][1];
        logs[k] = log_weights_[k] - (r0 * r0 + r1 * r1) / (2.0 * s);
        top = std::max(top, logs[k]);
    }
    if (!std::isfinite(top)) throw std::domain_error("quadrature density is not positive");
    double sum = 0.0, g0 = 0.0, g1 = 0.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const double p = std::exp(logs[k] - top);
        sum += p;
        g0 += p * (x[0] - e * nodes_[k][0]);
        g1 += p * (x[1] - e * nodes_[k][1]);
    }
    ScoreValue out;
    out.v = -(top + std::log(sum)) + std::log(2.0 * std::numbers::pi * s);
    out.grad = {g0 / (sum * s), g1 / (sum * s)};
    return out;
}

ScoreValue quadrature_score_2d(const PotentialSpec& spec, int Q, const std::array<std::pair<double, double>, 2>& domain,
                               double t, std::span<const double> x) {
    return QuadratureScore2d(spec, Q, domain)(t, x);
}

QuadratureScoreModel::QuadratureScoreModel(QuadratureScore2d score, std::vector<double> grid,
                                           std::array<std::pair<double, double>, 2> domain)
    : score_(std::move(score)), grid_(std::move(grid)), domain_(domain) {}

std::size_t QuadratureScoreModel::grad_v(std::size_t k, std::span<const double> x, std::span<double> g) const {
    const ScoreValue s = score_(grid_.at(k), x);
    g[0] = s.grad[0];
    g[1] = s.grad[1];
    std::size_t outside = 0;
    for (std::size_t i = 0; i < 2; ++i)
        if (x[i] < domain_[i].first || x[i] > domain_[i].second) ++outside;
    return outside;
}

RiccatiScoreModel::RiccatiScoreModel(const Eigen::MatrixXd& Q0, std::vector<double> grid) : grid_(std::move(grid)) {
    for (double t : grid_) Qs_.push_back(riccati_reference(Q0, t));
}

std::size_t RiccatiScoreModel::grad_v(std::size_t k, std::span<const double> x, std::span<double> g) const {
    const Eigen::MatrixXd& Q = Qs_.at(k);
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < Q.cols(); ++j) s += Q(i, j) * x[std::size_t(j)];
        g[std::size_t(i)] = 2.0 * s;
    }
    return 0;
}

DenseTensor dense_mode_product(const DenseTensor& a, std::size_t i, const Eigen::MatrixXd& m) {
    if (i >= a.mode_sizes.size()) throw ShapeError("mode index out of range");
    if (std::size_t(m.cols()) != a.mode_sizes[i]) throw ShapeError("matrix does not match the mode size");
    std::vector<std::size_t> sizes = a.mode_sizes;
    sizes[i] = std::size_t(m.rows());
    check_dense_size(sizes);
    std::size_t outer = 1, inner = 1;
    for (std::size_t k = 0; k < i; ++k) outer *= a.mode_sizes[k];
    for (std::size_t k = i + 1; k < sizes.size(); ++k) inner *= a.mode_sizes[k];
    const std::size_t n_in = a.mode_sizes[i], n_out = sizes[i];
    DenseTensor out(sizes);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t r = 0; r < n_out; ++r)
            for (std::size_t k = 0; k < n_in; ++k) {
                const double w = m(Eigen::Index(r), Eigen::Index(k));
                if (w == 0.0) continue;
                const double* src = a.entries.data() + (o * n_in + k) * inner;
                double* dst = out.entries.data() + (o * n_out + r) * inner;
                for (std::size_t q = 0; q < inner; ++q) dst[q] += w * src[q];
            }
    return out;
}

DenseTensor dense_to_monomials(const DenseTensor& a, const PolySpace& space) {
    if (a.mode_sizes.size() != space.dims()) throw ShapeError("tensor does not match the space");
    DenseTensor m = a;
    for (std::size_t i = 0; i < space.dims(); ++i)
        m = dense_mode_product(m, i, legendre_to_mono(space.basis(i, degree_of_mode(a.mode_sizes[i]))));
    return m;
}

DenseTensor dense_from_monomials(const DenseTensor& m, const PolySpace& space) {
    if (m.mode_sizes.size() != space.dims()) throw ShapeError("tensor does not match the space");
    DenseTensor a = m;
    for (std::size_t i = 0; i < space.dims(); ++i)
        a = dense_mode_product(a, i, legendre_to_mono(space.basis(i, degree_of_mode(m.mode_sizes[i]))).inverse());
    return a;
}

DenseTensor dense_apply_lin(const DenseTensor& a, const PolySpace& space) {
    const DenseTensor m = dense_to_monomials(a, space);
    DenseTensor acc(m.mode_sizes);
    for (std::size_t i = 0; i < space.dims(); ++i) {
        const LegendreBasis& B = space.basis(i, degree_of_mode(m.mode_sizes[i]));
        acc = add(acc, dense_mode_product(m, i, mono_generator(m.mode_sizes[i], B.c1(), B.c0())));
    }
    return dense_from_monomials(acc, space);
}

DenseTensor dense_apply_partial(const DenseTensor& a, std::size_t i, const PolySpace& space) {
    const DenseTensor m = dense_to_monomials(a, space);
    const double c1 = space.basis(i).c1();
    return dense_from_monomials(dense_mode_product(m, i, mono_derivative(m.mode_sizes.at(i), c1)), space);
}

DenseTensor dense_poly_multiply(const DenseTensor& a, const DenseTensor& b, const PolySpace& space) {
    return dense_from_monomials(mono_convolve(dense_to_monomials(a, space), dense_to_monomials(b, space)), space);
}

DenseTensor dense_apply_nonlin_linearized(const DenseTensor& b, const DenseTensor& a, const PolySpace& space) {
    const DenseTensor ma = dense_to_monomials(a, space), mb = dense_to_monomials(b, space);
    std::vector<std::size_t> sizes(space.dims());
    for (std::size_t i = 0; i < sizes.size(); ++i) sizes[i] = ma.mode_sizes[i] + mb.mode_sizes[i] - 1;
    DenseTensor acc(sizes);
    for (std::size_t i = 0; i < space.dims(); ++i) {
        const double c1 = space.basis(i).c1();
        const DenseTensor da = dense_mode_product(ma, i, mono_derivative(ma.mode_sizes[i], c1));
        const DenseTensor db = dense_mode_product(mb, i, mono_derivative(mb.mode_sizes[i], c1));
        acc = add(acc, mono_convolve(da, db), -1.0);
    }
    return dense_from_monomials(acc, space);
}

DenseTensor dense_apply_nonlin(const DenseTensor& a, const PolySpace& space) {
    return dense_apply_nonlin_linearized(a, a, space);
}

DenseTensor dense_project_degree(const DenseTensor& a, std::span<const int> n) {
    if (n.size() != a.mode_sizes.size()) throw ShapeError("need one degree per dimension");
    DenseTensor out = a;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] < 0 || std::size_t(n[i]) + 1 > a.mode_sizes[i]) throw ShapeError("projection degree too large");
        Eigen::MatrixXd keep = Eigen::MatrixXd::Identity(n[i] + 1, Eigen::Index(out.mode_sizes[i]));
        out = dense_mode_product(out, i, keep);
    }
    return out;
}

DenseTensor dense_rhs_reference(const DenseTensor& a, const PolySpace& space) {
    std::vector<int> n;
    for (auto s : a.mode_sizes) n.push_back(degree_of_mode(s));
    return add(dense_apply_lin(a, space), dense_project_degree(dense_apply_nonlin(a, space), n));
}

Eigen::MatrixXd dense_stiffness_matrix(const DenseTensor& b, const PolySpace& space) {
    std::vector<int> n;
    for (auto s : b.mode_sizes) n.push_back(degree_of_mode(s));
    const std::size_t N = b.size();
    Eigen::MatrixXd H(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    for (std::size_t k = 0; k < N; ++k) {
        DenseTensor e(b.mode_sizes);
        e.entries[k] = 1.0;
        const DenseTensor col =
            add(dense_apply_lin(e, space), dense_project_degree(dense_apply_nonlin_linearized(b, e, space), n), 2.0);
        for (std::size_t r = 0; r < N; ++r) H(Eigen::Index(r), Eigen::Index(k)) = col.entries[r];
    }
    return H;
}

Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> metropolis_2d(const SparsePoly& phi, std::size_t n,
                                                                        std::size_t burn_in, std::size_t thin,
                                                                        double step, std::uint64_t seed) {
    if (thin == 0 || !(step > 0.0)) throw std::invalid_argument("thin and step must be positive");
    ParticleRng rng(seed, 0);
    std::array<double, 2> x{0.0, 0.0};
    double fx = evaluate_poly(phi, x);
    Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> out(Eigen::Index(n), 2);
    const std::size_t total = burn_in + n * thin;
    for (std::size_t it = 0; it < total; ++it) {
        const std::array<double, 2> y{x[0] + step * rng.normal(), x[1] + step * rng.normal()};
        const double fy = evaluate_poly(phi, y);
        if (std::log(rng.uniform()) < fx - fy) {
            x = y;
            fx = fy;
        }
        if (it >= burn_in && (it - burn_in + 1) % thin == 0) {
            const auto row = Eigen::Index((it - burn_in) / thin);
            out(row, 0) = x[0];
            out(row, 1) = x[1];
        }
    }
    return out;
}

TensorTrain random_tensor_train(const std::vector<std::size_t>& mode_sizes, const std::vector<std::size_t>& ranks,
                                std::uint64_t seed) {
    const std::size_t d = mode_sizes.size();
    if (d == 0 || ranks.size() + 1 != d) throw ShapeError("need d mode sizes and d-1 ranks");
    ParticleRng rng(seed, 0x7474);
    std::vector<Core> cores;
    for (std::size_t i = 0; i < d; ++i) {
        Core c(i == 0 ? 1 : ranks[i - 1], mode_sizes[i], i + 1 == d ? 1 : ranks[i]);
        for (double& v : c.data) v = rng.normal();
        cores.push_back(std::move(c));
    }
    return TensorTrain(std::move(cores));
}

double relative_error(const DenseTensor& a, const DenseTensor& b) {
    if (a.mode_sizes != b.mode_sizes) throw ShapeError("dense tensors differ in shape");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a.entries[k] - b.entries[k]) * (a.entries[k] - b.entries[k]);
        den += b.entries[k] * b.entries[k];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double energy_distance(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y) {
    if (x.cols() != y.cols()) throw ShapeError("point clouds differ in dimension");
    if (x.rows() == 0 || y.rows() == 0) throw std::invalid_argument("empty point cloud");
    auto mean_dist = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const Eigen::RowVectorXd r = a.row(i);
            s += (b.rowwise() - r).rowwise().norm().sum();
        }
        return s / (double(a.rows()) * double(b.rows()));
    };
    const Eigen::MatrixXd X = x, Y = y;
    return 2.0 * mean_dist(X, Y) - mean_dist(X, X) - mean_dist(Y, Y);
}

} // namespace tthjb
