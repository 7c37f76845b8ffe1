#include "tthjb/hjb_operators.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace tthjb {

namespace {

void require_space(const TensorTrain& a, const PolySpace& space) {
    if (a.dims() != space.dims())
        throw ShapeError("tensor has " + std::to_string(a.dims()) + " dimensions, space has " + std::to_string(space.dims()));
    for (std::size_t i = 0; i < a.dims(); ++i)
        if (a.core(i).mode > std::size_t(kMaxDegree) + 1)
            throw std::domain_error("mode size of dimension " + std::to_string(i) + " exceeds the degree cap");
}

int degree(const Core& c) { return int(c.mode) - 1; }

// Core of the product of two univariate core families. The rank index is (b, a) with b major.
Core multiply_core(const Core& a, const Core& b, const PolySpace& space, std::size_t i) {
    const int na = degree(a), nb = degree(b);
    if (na + nb > kMaxDegree)
        throw std::domain_error("product degree " + std::to_string(na + nb) + " in dimension " + std::to_string(i) +
                                " exceeds the degree cap of 12");
    const Core ah = apply_mode_matrix(a, space.basis(i, na).Ts);
    const Core bh = apply_mode_matrix(b, space.basis(i, nb).Ts);
    Core ch(a.left * b.left, std::size_t(na + nb) + 1, a.right * b.right);
    for (std::size_t k = 0; k < b.left; ++k)
        for (std::size_t l = 0; l < a.left; ++l) {
            const std::size_t row = k * a.left + l;
            for (std::size_t be = 0; be < b.mode; ++be)
                for (std::size_t kp = 0; kp < b.right; ++kp) {
                    const double bv = bh(k, be, kp);
                    if (bv == 0.0) continue;
                    for (std::size_t al = 0; al < a.mode; ++al) {
                        double* dst = &ch(row, al + be, kp * a.right);
                        const double* src = ah.data.data() + (l * ah.mode + al) * ah.right;
                        for (std::size_t lp = 0; lp < a.right; ++lp) dst[lp] += bv * src[lp];
                    }
                }
        }
    return apply_mode_matrix(ch, space.basis(i, na + nb).Ts_inv);
}

Core derivative_core(const Core& c, const PolySpace& space, std::size_t i) {
    return apply_mode_matrix(c, space.basis(i, degree(c)).Dx);
}

} // namespace

std::vector<int> degrees_of(const TensorTrain& a) {
    std::vector<int> n;
    for (const auto& c : a.cores()) n.push_back(degree(c));
    return n;
}

TensorTrain apply_lin(const TensorTrain& a, const PolySpace& space) {
    require_space(a, space);
    std::vector<Eigen::MatrixXd> ms;
    for (std::size_t i = 0; i < a.dims(); ++i) ms.push_back(space.basis(i, degree(a.core(i))).D);
    return tt_laplace_like_apply(a, ms);
}

TensorTrain apply_partial(const TensorTrain& a, std::size_t i, const PolySpace& space) {
    require_space(a, space);
    if (i >= a.dims()) throw ShapeError("dimension index out of range");
    return tt_apply_mode_matrix(a, i, space.basis(i, degree(a.core(i))).Dx);
}

TensorTrain poly_multiply(const TensorTrain& a, const TensorTrain& b, const PolySpace& space) {
    require_space(a, space);
    require_space(b, space);
    std::vector<Core> cores;
    for (std::size_t i = 0; i < a.dims(); ++i) cores.push_back(multiply_core(a.core(i), b.core(i), space, i));
    return TensorTrain(std::move(cores));
}

TensorTrain apply_nonlin_linearized(const TensorTrain& b, const TensorTrain& a, const PolySpace& space) {
    require_space(a, space);
    require_space(b, space);
    std::vector<Core> base, modified;
    for (std::size_t i = 0; i < a.dims(); ++i) {
        base.push_back(multiply_core(a.core(i), b.core(i), space, i));
        modified.push_back(multiply_core(derivative_core(a.core(i), space, i), derivative_core(b.core(i), space, i), space, i));
    }
    return tt_scale(tt_laplace_like_sum(base, modified), -1.0);
}

TensorTrain apply_nonlin(const TensorTrain& a, const PolySpace& space) { return apply_nonlin_linearized(a, a, space); }

TensorTrain project_degree(const TensorTrain& a, std::span<const int> n) {
    if (n.size() != a.dims()) throw ShapeError("need one degree per dimension");
    TensorTrain out = a;
    for (std::size_t i = 0; i < a.dims(); ++i) {
        if (n[i] < 0 || std::size_t(n[i]) + 1 > a.core(i).mode)
            throw ShapeError("projection degree exceeds current degree in dimension " + std::to_string(i));
        if (std::size_t(n[i]) + 1 < a.core(i).mode) out = tt_resize_mode(out, i, std::size_t(n[i]) + 1);
    }
    return out;
}

TensorTrain resize_degrees(const TensorTrain& a, std::span<const int> n) {
    if (n.size() != a.dims()) throw ShapeError("need one degree per dimension");
    TensorTrain out = a;
    for (std::size_t i = 0; i < a.dims(); ++i)
        if (std::size_t(n[i]) + 1 != a.core(i).mode) out = tt_resize_mode(out, i, std::size_t(n[i]) + 1);
    return out;
}

TensorTrain apply_stiffness(const TensorTrain& b, const TensorTrain& a, const PolySpace& space) {
    const auto n = degrees_of(a);
    // B may sit at different degrees than A; align it so the product cores are compatible.
    const TensorTrain bb = degrees_of(b) == n ? b : resize_degrees(b, n);
    TensorTrain nl = project_degree(apply_nonlin_linearized(bb, a, space), n);
    return tt_add_scaled(apply_lin(a, space), nl, 2.0);
}

TensorTrain hjb_rhs(const TensorTrain& y, const PolySpace& space, TensorTrain* nl_out) {
    const auto n = degrees_of(y);
    TensorTrain nl = apply_nonlin(y, space);
    TensorTrain rhs = tt_add_scaled(apply_lin(y, space), project_degree(nl, n), 1.0);
    if (nl_out) *nl_out = std::move(nl);
    return rhs;
}

QuadraticPart extract_quadratic(const TensorTrain& a, const PolySpace& space) {
    require_space(a, space);
    const std::size_t d = a.dims();
    // mono[i][m]: slice of core i holding the coefficient of x_i^m (zero when m exceeds the degree).
    std::vector<std::array<Eigen::MatrixXd, 3>> mono(d);
    for (std::size_t i = 0; i < d; ++i) {
        const Core& c = a.core(i);
        const LegendreBasis& B = space.basis(i, degree(c));
        for (int m = 0; m < 3; ++m) {
            Eigen::MatrixXd s = Eigen::MatrixXd::Zero(Eigen::Index(c.left), Eigen::Index(c.right));
            if (m <= B.n)
                for (std::size_t al = 0; al < c.mode; ++al) {
                    const double t = B.T(m, Eigen::Index(al));
                    if (t != 0.0) s += t * c.slice(al);
                }
            mono[i][std::size_t(m)] = std::move(s);
        }
    }
    // prefix[i] = M0_0 ... M0_{i-1} (row vector), suffix[i] = M0_i ... M0_{d-1} (column vector).
    std::vector<Eigen::RowVectorXd> prefix(d + 1);
    std::vector<Eigen::VectorXd> suffix(d + 1);
    prefix[0] = Eigen::RowVectorXd::Ones(1);
    for (std::size_t i = 0; i < d; ++i) prefix[i + 1] = prefix[i] * mono[i][0];
    suffix[d] = Eigen::VectorXd::Ones(1);
    for (std::size_t i = d; i-- > 0;) suffix[i] = mono[i][0] * suffix[i + 1];

    QuadraticPart q;
    q.a0 = prefix[d](0);
    q.b = Eigen::VectorXd::Zero(Eigen::Index(d));
    q.Q = Eigen::MatrixXd::Zero(Eigen::Index(d), Eigen::Index(d));
    for (std::size_t i = 0; i < d; ++i) {
        q.b(Eigen::Index(i)) = (prefix[i] * mono[i][1] * suffix[i + 1])(0);
        q.Q(Eigen::Index(i), Eigen::Index(i)) = (prefix[i] * mono[i][2] * suffix[i + 1])(0);
        Eigen::RowVectorXd w = prefix[i] * mono[i][1];
        for (std::size_t j = i + 1; j < d; ++j) {
            const double cij = (w * mono[j][1] * suffix[j + 1])(0);
            q.Q(Eigen::Index(i), Eigen::Index(j)) = q.Q(Eigen::Index(j), Eigen::Index(i)) = 0.5 * cij;
            w = w * mono[j][0];
        }
    }
    return q;
}

} // namespace tthjb
