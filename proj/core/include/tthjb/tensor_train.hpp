#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tthjb {

/// Thrown on mismatched shapes, invalid ranks or oversized dense requests.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Order-3 TT core, stored row-major as (left rank, mode, right rank).
struct Core {
    std::size_t left = 1;
    std::size_t mode = 1;
    std::size_t right = 1;
    std::vector<double> data;

    Core() : data(1, 0.0) {}
    Core(std::size_t l, std::size_t n, std::size_t r) : left(l), mode(n), right(r), data(l * n * r, 0.0) {}

    double& operator()(std::size_t a, std::size_t i, std::size_t b) { return data[(a * mode + i) * right + b]; }
    double operator()(std::size_t a, std::size_t i, std::size_t b) const { return data[(a * mode + i) * right + b]; }

    using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MatrixMap = Eigen::Map<RowMajorMatrix>;
    using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;

    /// (left*mode) x right view.
    MatrixMap left_unfolding() { return {data.data(), Eigen::Index(left * mode), Eigen::Index(right)}; }
    ConstMatrixMap left_unfolding() const { return {data.data(), Eigen::Index(left * mode), Eigen::Index(right)}; }
    /// left x (mode*right) view.
    MatrixMap right_unfolding() { return {data.data(), Eigen::Index(left), Eigen::Index(mode * right)}; }
    ConstMatrixMap right_unfolding() const { return {data.data(), Eigen::Index(left), Eigen::Index(mode * right)}; }

    /// Slice C[:, i, :] as a left x right matrix (copy).
    Eigen::MatrixXd slice(std::size_t i) const;
};

enum class Orthogonality { none, left, right };

/// Records which cores are known to be orthogonal: `left` means cores [0, pivot) are
/// left-orthogonal, `right` means cores (pivot, d) are right-orthogonal.
struct OrthoMarker {
    Orthogonality kind = Orthogonality::none;
    std::size_t pivot = 0;
};

class TensorTrain {
public:
    TensorTrain() = default;
    explicit TensorTrain(std::vector<Core> cores);

    /// Zero tensor with all ranks 1.
    static TensorTrain zeros(const std::vector<std::size_t>& mode_sizes);
    /// Outer product scale * f_1 (x) f_2 (x) ... (x) f_d.
    static TensorTrain rank_one(const std::vector<std::vector<double>>& factors, double scale = 1.0);

    std::size_t dims() const { return cores_.size(); }
    std::vector<std::size_t> mode_sizes() const;
    /// d+1 entries, first and last are 1.
    std::vector<std::size_t> ranks() const;
    /// The d-1 interior ranks.
    std::vector<std::size_t> interior_ranks() const;
    std::size_t max_rank() const;

    const Core& core(std::size_t i) const { return cores_.at(i); }
    Core& core(std::size_t i) { return cores_.at(i); }
    const std::vector<Core>& cores() const { return cores_; }
    std::vector<Core>& cores() { return cores_; }

    OrthoMarker ortho;

    /// Throws ShapeError when the rank chain is inconsistent.
    void validate() const;
    bool all_finite() const;

private:
    std::vector<Core> cores_;
};

/// Dense oracle representation, row-major over the modes. Intended for small d.
struct DenseTensor {
    std::vector<std::size_t> mode_sizes;
    std::vector<double> entries;

    DenseTensor() = default;
    explicit DenseTensor(std::vector<std::size_t> sizes);

    std::size_t size() const { return entries.size(); }
    double& at(std::span<const std::size_t> index);
    double at(std::span<const std::size_t> index) const;
    std::size_t offset(std::span<const std::size_t> index) const;
};

inline constexpr std::size_t kMaxDenseEntries = 10'000'000;

TensorTrain tt_from_dense(const DenseTensor& t, double tol);
DenseTensor tt_to_dense(const TensorTrain& a);

/// a + c*b, exact; interior ranks add.
TensorTrain tt_add_scaled(const TensorTrain& a, const TensorTrain& b, double c);
TensorTrain tt_scale(TensorTrain a, double c);

double tt_inner(const TensorTrain& a, const TensorTrain& b);
/// Frobenius norm via right-orthogonalization.
double tt_norm(const TensorTrain& a);

/// Rounding target. With only `tol`, truncation is relative-accuracy driven; `max_ranks`
/// (d-1 interior entries) caps the ranks. Both may be combined.
struct RoundSpec {
    double tol = 0.0;
    std::optional<std::vector<std::size_t>> max_ranks;

    static RoundSpec tolerance(double t) { return {t, std::nullopt}; }
    static RoundSpec ranks(std::vector<std::size_t> r) { return {0.0, std::move(r)}; }
    static RoundSpec both(double t, std::vector<std::size_t> r) { return {t, std::move(r)}; }
};

/// Right-to-left orthogonalization then left-to-right truncated SVD. Never raises a rank.
TensorTrain tt_round(const TensorTrain& a, const RoundSpec& spec);

/// Sum_alpha A[alpha] prod_i vs[i][alpha_i].
double tt_contract_mode_vectors(const TensorTrain& a, std::span<const std::vector<double>> vs);

/// (I x ... x m x ... x I) A acting on mode i. m may change the mode size.
TensorTrain tt_apply_mode_matrix(const TensorTrain& a, std::size_t i, const Eigen::MatrixXd& m);

/// Sum_i (I x ... x ms[i] x ... x I) A with the 2x2 block cores; interior ranks double.
TensorTrain tt_laplace_like_apply(const TensorTrain& a, std::span<const Eigen::MatrixXd> ms);

/// Block-core assembly of Sum_i F_1 ... G_i ... F_d given base cores F and per-position
/// replacement cores G of identical shapes.
TensorTrain tt_laplace_like_sum(const std::vector<Core>& base, const std::vector<Core>& modified);

/// Applies `m` to the mode index of a single core.
Core apply_mode_matrix(const Core& c, const Eigen::MatrixXd& m);

/// In-place orthogonalization helpers. After `right_orthogonalize(a, k)`, cores k+1..d-1
/// are right-orthogonal; after `left_orthogonalize(a, k)`, cores 0..k-1 are left-orthogonal.
void right_orthogonalize(TensorTrain& a, std::size_t k = 0);
void left_orthogonalize(TensorTrain& a, std::size_t k);
/// QR of core i's left unfolding, R pushed into core i+1.
void orthogonalize_core_left(TensorTrain& a, std::size_t i);

/// Keeps mode indices [0, new_size) of dimension i (new_size <= current) or zero-pads.
TensorTrain tt_resize_mode(const TensorTrain& a, std::size_t i, std::size_t new_size);

std::string format_ranks(const std::vector<std::size_t>& r);

} // namespace tthjb
