#include "tthjb/tensor_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace tthjb {

namespace {

using RowMatrix = Core::RowMajorMatrix;

void require_same_shape(const TensorTrain& a, const TensorTrain& b, const char* what) {
    if (a.dims() != b.dims() || a.mode_sizes() != b.mode_sizes())
        throw ShapeError(std::string(what) + ": mode sizes differ");
}

std::size_t checked_product(const std::vector<std::size_t>& sizes) {
    std::size_t total = 1;
    for (std::size_t n : sizes) {
        if (n == 0) throw ShapeError("mode size must be positive");
        if (total > kMaxDenseEntries / n) throw ShapeError("dense tensor would exceed 1e7 entries");
        total *= n;
    }
    return total;
}

Core core_from_matrix(const RowMatrix& m, std::size_t left, std::size_t mode, std::size_t right) {
    Core c(left, mode, right);
    std::copy(m.data(), m.data() + m.size(), c.data.begin());
    return c;
}

// Flip signs so the first entry of each left singular vector that is clearly nonzero is positive.
void fix_signs(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            if (std::abs(u(i, k)) > 1e-12) {
                if (u(i, k) < 0) {
                    u.col(k) *= -1.0;
                    v.col(k) *= -1.0;
                }
                break;
            }
        }
    }
}

// Number of singular values to keep so the discarded tail has 2-norm <= threshold.
std::size_t truncation_rank(const Eigen::VectorXd& s, double threshold) {
    std::size_t k = static_cast<std::size_t>(s.size());
    double tail = 0.0;
    while (k > 1) {
        double next = tail + s(Eigen::Index(k - 1)) * s(Eigen::Index(k - 1));
        if (std::sqrt(next) > threshold) break;
        tail = next;
        --k;
    }
    return std::max<std::size_t>(k, 1);
}

} // namespace

Eigen::MatrixXd Core::slice(std::size_t i) const {
    Eigen::MatrixXd s(left, right);
    for (std::size_t a = 0; a < left; ++a)
        for (std::size_t b = 0; b < right; ++b) s(Eigen::Index(a), Eigen::Index(b)) = (*this)(a, i, b);
    return s;
}

TensorTrain::TensorTrain(std::vector<Core> cores) : cores_(std::move(cores)) { validate(); }

TensorTrain TensorTrain::zeros(const std::vector<std::size_t>& mode_sizes) {
    if (mode_sizes.empty()) throw ShapeError("tensor train needs at least one dimension");
    std::vector<Core> cores;
    cores.reserve(mode_sizes.size());
    for (std::size_t n : mode_sizes) cores.emplace_back(1, n, 1);
    return TensorTrain(std::move(cores));
}

TensorTrain TensorTrain::rank_one(const std::vector<std::vector<double>>& factors, double scale) {
    if (factors.empty()) throw ShapeError("tensor train needs at least one dimension");
    std::vector<Core> cores;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        Core c(1, factors[i].size(), 1);
        for (std::size_t k = 0; k < factors[i].size(); ++k) c.data[k] = factors[i][k] * (i == 0 ? scale : 1.0);
        cores.push_back(std::move(c));
    }
    return TensorTrain(std::move(cores));
}

std::vector<std::size_t> TensorTrain::mode_sizes() const {
    std::vector<std::size_t> n;
    n.reserve(cores_.size());
    for (const auto& c : cores_) n.push_back(c.mode);
    return n;
}

std::vector<std::size_t> TensorTrain::ranks() const {
    std::vector<std::size_t> r;
    r.reserve(cores_.size() + 1);
    r.push_back(cores_.empty() ? 1 : cores_.front().left);
    for (const auto& c : cores_) r.push_back(c.right);
    return r;
}

std::vector<std::size_t> TensorTrain::interior_ranks() const {
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i + 1 < cores_.size(); ++i) r.push_back(cores_[i].right);
    return r;
}

std::size_t TensorTrain::max_rank() const {
    std::size_t m = 1;
    for (const auto& c : cores_) m = std::max(m, c.right);
    return m;
}

void TensorTrain::validate() const {
    if (cores_.empty()) throw ShapeError("tensor train needs at least one dimension");
    if (cores_.front().left != 1 || cores_.back().right != 1) throw ShapeError("boundary ranks must be 1");
    for (std::size_t i = 0; i < cores_.size(); ++i) {
        const Core& c = cores_[i];
        if (c.left == 0 || c.mode == 0 || c.right == 0) throw ShapeError("core " + std::to_string(i) + " has a zero extent");
        if (c.data.size() != c.left * c.mode * c.right)
            throw ShapeError("core " + std::to_string(i) + " storage does not match its shape");
        if (i + 1 < cores_.size() && c.right != cores_[i + 1].left)
            throw ShapeError("rank mismatch between cores " + std::to_string(i) + " and " + std::to_string(i + 1));
    }
}

bool TensorTrain::all_finite() const {
    for (const auto& c : cores_)
        for (double x : c.data)
            if (!std::isfinite(x)) return false;
    return true;
}

DenseTensor::DenseTensor(std::vector<std::size_t> sizes) : mode_sizes(std::move(sizes)) {
    entries.assign(checked_product(mode_sizes), 0.0);
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
    if (index.size() != mode_sizes.size()) throw ShapeError("index has wrong length");
    std::size_t off = 0;
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= mode_sizes[i]) throw ShapeError("index out of range");
        off = off * mode_sizes[i] + index[i];
    }
    return off;
}

double& DenseTensor::at(std::span<const std::size_t> index) { return entries[offset(index)]; }
double DenseTensor::at(std::span<const std::size_t> index) const { return entries[offset(index)]; }

TensorTrain tt_from_dense(const DenseTensor& t, double tol) {
    if (tol < 0) throw std::invalid_argument("tol must be nonnegative");
    const std::size_t d = t.mode_sizes.size();
    if (d == 0) throw ShapeError("dense tensor needs at least one dimension");
    if (checked_product(t.mode_sizes) != t.entries.size()) throw ShapeError("entry count does not match mode sizes");

    Eigen::Map<const Eigen::VectorXd> flat(t.entries.data(), Eigen::Index(t.entries.size()));
    const double norm = flat.norm();
    if (norm == 0.0) return TensorTrain::zeros(t.mode_sizes);
    const double threshold = d > 1 ? tol * norm / std::sqrt(double(d - 1)) : 0.0;

    std::vector<Core> cores;
    RowMatrix rest = Eigen::Map<const RowMatrix>(t.entries.data(), 1, Eigen::Index(t.entries.size()));
    std::size_t left = 1;
    for (std::size_t i = 0; i + 1 < d; ++i) {
        const std::size_t n = t.mode_sizes[i];
        const Eigen::Index cols = rest.size() / Eigen::Index(left * n);
        RowMatrix unfold = Eigen::Map<RowMatrix>(rest.data(), Eigen::Index(left * n), cols);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(unfold, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::MatrixXd u = svd.matrixU();
        Eigen::MatrixXd v = svd.matrixV();
        fix_signs(u, v);
        const std::size_t k = truncation_rank(svd.singularValues(), threshold);
        cores.push_back(core_from_matrix(u.leftCols(Eigen::Index(k)), left, n, k));
        rest = svd.singularValues().head(Eigen::Index(k)).asDiagonal() * v.leftCols(Eigen::Index(k)).transpose();
        left = k;
    }
    cores.push_back(core_from_matrix(rest, left, t.mode_sizes.back(), 1));
    return TensorTrain(std::move(cores));
}

DenseTensor tt_to_dense(const TensorTrain& a) {
    DenseTensor out(a.mode_sizes());
    // Running (prefix entries) x rank matrix.
    RowMatrix acc = RowMatrix::Ones(1, 1);
    for (const Core& c : a.cores()) {
        RowMatrix next(acc.rows() * Eigen::Index(c.mode), Eigen::Index(c.right));
        RowMatrix prod = acc * c.right_unfolding();
        // prod is (prefix) x (mode*right); reshape row-major to (prefix*mode) x right.
        std::copy(prod.data(), prod.data() + prod.size(), next.data());
        acc = std::move(next);
    }
    std::copy(acc.data(), acc.data() + acc.size(), out.entries.begin());
    return out;
}

TensorTrain tt_add_scaled(const TensorTrain& a, const TensorTrain& b, double c) {
    require_same_shape(a, b, "tt_add_scaled");
    const std::size_t d = a.dims();
    std::vector<Core> cores;
    cores.reserve(d);
    if (d == 1) {
        Core s = a.core(0);
        for (std::size_t k = 0; k < s.data.size(); ++k) s.data[k] += c * b.core(0).data[k];
        cores.push_back(std::move(s));
        return TensorTrain(std::move(cores));
    }
    for (std::size_t i = 0; i < d; ++i) {
        const Core& x = a.core(i);
        const Core& y = b.core(i);
        const bool first = i == 0;
        const bool last = i + 1 == d;
        const std::size_t l = first ? 1 : x.left + y.left;
        const std::size_t r = last ? 1 : x.right + y.right;
        Core s(l, x.mode, r);
        const std::size_t yl_off = first ? 0 : x.left;
        const std::size_t yr_off = last ? 0 : x.right;
        const double yscale = first ? c : 1.0;
        for (std::size_t j = 0; j < x.mode; ++j) {
            for (std::size_t p = 0; p < x.left; ++p)
                for (std::size_t q = 0; q < x.right; ++q) s(p, j, q) = x(p, j, q);
            for (std::size_t p = 0; p < y.left; ++p)
                for (std::size_t q = 0; q < y.right; ++q) s(yl_off + p, j, yr_off + q) += yscale * y(p, j, q);
        }
        cores.push_back(std::move(s));
    }
    return TensorTrain(std::move(cores));
}

TensorTrain tt_scale(TensorTrain a, double c) {
    for (double& x : a.core(0).data) x *= c;
    return a;
}

double tt_inner(const TensorTrain& a, const TensorTrain& b) {
    require_same_shape(a, b, "tt_inner");
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(1, 1);
    for (std::size_t i = 0; i < a.dims(); ++i) {
        const Core& x = a.core(i);
        const Core& y = b.core(i);
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(Eigen::Index(x.right), Eigen::Index(y.right));
        for (std::size_t j = 0; j < x.mode; ++j) next.noalias() += x.slice(j).transpose() * w * y.slice(j);
        w = std::move(next);
    }
    return w(0, 0);
}

void right_orthogonalize(TensorTrain& a, std::size_t k) {
    const std::size_t d = a.dims();
    for (std::size_t i = d - 1; i > k; --i) {
        Core& c = a.core(i);
        Eigen::MatrixXd mt = c.right_unfolding().transpose(); // (n*r) x l
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(mt);
        const Eigen::Index kk = std::min(mt.rows(), mt.cols());
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(mt.rows(), kk);
        Eigen::MatrixXd r = qr.matrixQR().topRows(kk).triangularView<Eigen::Upper>();
        Core nc(std::size_t(kk), c.mode, c.right);
        nc.right_unfolding() = q.transpose();
        Core& prev = a.core(i - 1);
        Core np(prev.left, prev.mode, std::size_t(kk));
        np.left_unfolding() = prev.left_unfolding() * r.transpose();
        c = std::move(nc);
        prev = std::move(np);
    }
    a.ortho = {Orthogonality::right, k};
}

void orthogonalize_core_left(TensorTrain& a, std::size_t i) {
    if (i + 1 >= a.dims()) throw ShapeError("cannot move orthogonality past the last core");
    Core& c = a.core(i);
    Eigen::MatrixXd m = c.left_unfolding();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::Index kk = std::min(m.rows(), m.cols());
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), kk);
    Eigen::MatrixXd r = qr.matrixQR().topRows(kk).triangularView<Eigen::Upper>();
    Core nc(c.left, c.mode, std::size_t(kk));
    nc.left_unfolding() = q;
    Core& next = a.core(i + 1);
    Core nn(std::size_t(kk), next.mode, next.right);
    nn.right_unfolding() = r * next.right_unfolding();
    c = std::move(nc);
    next = std::move(nn);
    a.ortho = {};
}

void left_orthogonalize(TensorTrain& a, std::size_t k) {
    for (std::size_t i = 0; i < k && i + 1 < a.dims(); ++i) orthogonalize_core_left(a, i);
    a.ortho = {Orthogonality::left, k};
}

double tt_norm(const TensorTrain& a) {
    TensorTrain b = a;
    right_orthogonalize(b, 0);
    Eigen::Map<const Eigen::VectorXd> v(b.core(0).data.data(), Eigen::Index(b.core(0).data.size()));
    return v.norm();
}

TensorTrain tt_round(const TensorTrain& a, const RoundSpec& spec) {
    if (spec.tol < 0) throw std::invalid_argument("tol must be nonnegative");
    const std::size_t d = a.dims();
    if (spec.max_ranks) {
        if (spec.max_ranks->size() != d - 1) throw ShapeError("max_ranks must have d-1 entries");
        for (std::size_t r : *spec.max_ranks)
            if (r == 0) throw ShapeError("max_ranks entries must be positive");
    }
    TensorTrain b = a;
    if (d == 1) return b;
    right_orthogonalize(b, 0);
    Eigen::Map<const Eigen::VectorXd> head(b.core(0).data.data(), Eigen::Index(b.core(0).data.size()));
    const double norm = head.norm();
    if (norm == 0.0) return TensorTrain::zeros(a.mode_sizes());
    const double threshold = spec.tol * norm / std::sqrt(double(d - 1));

    for (std::size_t i = 0; i + 1 < d; ++i) {
        Core& c = b.core(i);
        Eigen::MatrixXd m = c.left_unfolding();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::MatrixXd u = svd.matrixU();
        Eigen::MatrixXd v = svd.matrixV();
        fix_signs(u, v);
        std::size_t k = truncation_rank(svd.singularValues(), threshold);
        if (spec.max_ranks) k = std::min(k, (*spec.max_ranks)[i]);
        k = std::min<std::size_t>(k, std::size_t(svd.singularValues().size()));
        const Eigen::Index kk = Eigen::Index(k);
        Core nc(c.left, c.mode, k);
        nc.left_unfolding() = u.leftCols(kk);
        Eigen::MatrixXd sv = svd.singularValues().head(kk).asDiagonal() * v.leftCols(kk).transpose();
        Core& next = b.core(i + 1);
        Core nn(k, next.mode, next.right);
        nn.right_unfolding() = sv * next.right_unfolding();
        c = std::move(nc);
        next = std::move(nn);
    }
    b.ortho = {Orthogonality::left, d - 1};
    return b;
}

double tt_contract_mode_vectors(const TensorTrain& a, std::span<const std::vector<double>> vs) {
    if (vs.size() != a.dims()) throw ShapeError("need one vector per dimension");
    Eigen::RowVectorXd w = Eigen::RowVectorXd::Ones(1);
    for (std::size_t i = 0; i < a.dims(); ++i) {
        const Core& c = a.core(i);
        if (vs[i].size() != c.mode) throw ShapeError("vector length does not match mode size " + std::to_string(i));
        Eigen::RowVectorXd next = Eigen::RowVectorXd::Zero(Eigen::Index(c.right));
        for (std::size_t j = 0; j < c.mode; ++j) {
            if (vs[i][j] == 0.0) continue;
            next.noalias() += vs[i][j] * (w * c.slice(j));
        }
        w = std::move(next);
    }
    return w(0);
}

Core apply_mode_matrix(const Core& c, const Eigen::MatrixXd& m) {
    if (std::size_t(m.cols()) != c.mode) throw ShapeError("mode matrix columns do not match mode size");
    Core out(c.left, std::size_t(m.rows()), c.right);
    for (std::size_t a = 0; a < c.left; ++a) {
        Eigen::Map<const RowMatrix> in(c.data.data() + a * c.mode * c.right, Eigen::Index(c.mode), Eigen::Index(c.right));
        Eigen::Map<RowMatrix> res(out.data.data() + a * out.mode * c.right, m.rows(), Eigen::Index(c.right));
        res.noalias() = m * in;
    }
    return out;
}

TensorTrain tt_apply_mode_matrix(const TensorTrain& a, std::size_t i, const Eigen::MatrixXd& m) {
    if (i >= a.dims()) throw ShapeError("dimension index out of range");
    TensorTrain out = a;
    out.core(i) = apply_mode_matrix(a.core(i), m);
    out.ortho = {};
    return out;
}

TensorTrain tt_laplace_like_sum(const std::vector<Core>& base, const std::vector<Core>& modified) {
    const std::size_t d = base.size();
    if (d == 0 || modified.size() != d) throw ShapeError("laplace-like sum needs d base and d modified cores");
    for (std::size_t i = 0; i < d; ++i) {
        const Core& f = base[i];
        const Core& g = modified[i];
        if (f.left != g.left || f.mode != g.mode || f.right != g.right)
            throw ShapeError("modified core " + std::to_string(i) + " differs in shape from base core");
    }
    if (d == 1) return TensorTrain({modified[0]});

    std::vector<Core> cores;
    cores.reserve(d);
    // State ordering: (sum block, pure block).
    {
        const Core& f = base[0];
        const Core& g = modified[0];
        Core c(1, f.mode, 2 * f.right);
        for (std::size_t j = 0; j < f.mode; ++j)
            for (std::size_t q = 0; q < f.right; ++q) {
                c(0, j, q) = g(0, j, q);
                c(0, j, f.right + q) = f(0, j, q);
            }
        cores.push_back(std::move(c));
    }
    for (std::size_t i = 1; i + 1 < d; ++i) {
        const Core& f = base[i];
        const Core& g = modified[i];
        Core c(2 * f.left, f.mode, 2 * f.right);
        for (std::size_t p = 0; p < f.left; ++p)
            for (std::size_t j = 0; j < f.mode; ++j)
                for (std::size_t q = 0; q < f.right; ++q) {
                    c(p, j, q) = f(p, j, q);
                    c(f.left + p, j, q) = g(p, j, q);
                    c(f.left + p, j, f.right + q) = f(p, j, q);
                }
        cores.push_back(std::move(c));
    }
    {
        const Core& f = base[d - 1];
        const Core& g = modified[d - 1];
        Core c(2 * f.left, f.mode, 1);
        for (std::size_t p = 0; p < f.left; ++p)
            for (std::size_t j = 0; j < f.mode; ++j) {
                c(p, j, 0) = f(p, j, 0);
                c(f.left + p, j, 0) = g(p, j, 0);
            }
        cores.push_back(std::move(c));
    }
    return TensorTrain(std::move(cores));
}

TensorTrain tt_laplace_like_apply(const TensorTrain& a, std::span<const Eigen::MatrixXd> ms) {
    if (ms.size() != a.dims()) throw ShapeError("need one matrix per dimension");
    std::vector<Core> modified;
    modified.reserve(a.dims());
    for (std::size_t i = 0; i < a.dims(); ++i) {
        if (std::size_t(ms[i].rows()) != a.core(i).mode || std::size_t(ms[i].cols()) != a.core(i).mode)
            throw ShapeError("laplace-like operator " + std::to_string(i) + " must be square in the mode size");
        modified.push_back(apply_mode_matrix(a.core(i), ms[i]));
    }
    return tt_laplace_like_sum(a.cores(), modified);
}

TensorTrain tt_resize_mode(const TensorTrain& a, std::size_t i, std::size_t new_size) {
    if (i >= a.dims()) throw ShapeError("dimension index out of range");
    if (new_size == 0) throw ShapeError("mode size must be positive");
    TensorTrain out = a;
    const Core& c = a.core(i);
    Core nc(c.left, new_size, c.right);
    const std::size_t keep = std::min(new_size, c.mode);
    for (std::size_t p = 0; p < c.left; ++p)
        for (std::size_t j = 0; j < keep; ++j)
            for (std::size_t q = 0; q < c.right; ++q) nc(p, j, q) = c(p, j, q);
    out.core(i) = std::move(nc);
    out.ortho = {};
    return out;
}

std::string format_ranks(const std::vector<std::size_t>& r) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << ')';
    return os.str();
}

} // namespace tthjb
