#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tthjb/integrator.hpp"
#include "tthjb/poly_basis.hpp"
#include "tthjb/tensor_train.hpp"

namespace tthjb {

double eval_v(const SolutionSnapshot& snap, const PolySpace& space, std::span<const double> x);
std::vector<double> grad_v(const SolutionSnapshot& snap, const PolySpace& space, std::span<const double> x);

/// Relative Frobenius distance of the quadratic coefficient matrix from I/2.
double covariance_error(const SolutionSnapshot& snap, const PolySpace& space);

/// Value and gradient of one TT snapshot with cached core slices; safe for concurrent use.
class GradientEvaluator {
public:
    GradientEvaluator(const TensorTrain& coeffs, const PolySpace& space);

    std::size_t dims() const { return bases_.size(); }
    /// Writes the gradient into g and returns the number of coordinates outside the domain.
    std::size_t gradient(std::span<const double> x, std::span<double> g) const;
    double value(std::span<const double> x) const;

private:
    // Contracts every core with basis values (and derivatives) at x into `scratch`.
    void contract(std::span<const double> x, std::vector<double>& scratch, bool derivs, std::size_t* outside) const;

    std::vector<const LegendreBasis*> bases_;
    std::vector<Core> cores_;
    std::vector<std::size_t> offsets_;  // start of V_i inside the scratch buffer; D_i follows it
    std::size_t scratch_size_ = 0;
    std::size_t max_mode_ = 0;
};

/// Source of grad v_t at forward times of a fixed grid.
class ScoreModel {
public:
    virtual ~ScoreModel() = default;
    virtual std::size_t dims() const = 0;
    /// Increasing forward times t_0 = 0 < ... < t_N = T at which gradients are available.
    virtual const std::vector<double>& grid() const = 0;
    /// Gradient of v at forward grid point k; returns the out-of-domain coordinate count.
    virtual std::size_t grad_v(std::size_t k, std::span<const double> x, std::span<double> g) const = 0;
};

/// Scores from a solved trajectory. Grid times without a stored snapshot are bridged once,
/// up front, by evaluate_at_time.
class TrajectoryScore : public ScoreModel {
public:
    TrajectoryScore(const Trajectory& traj, const PolySpace& space, const SolverConfig& cfg,
                    std::vector<double> grid = {});

    std::size_t dims() const override { return dims_; }
    const std::vector<double>& grid() const override { return grid_; }
    std::size_t grad_v(std::size_t k, std::span<const double> x, std::span<double> g) const override;

private:
    std::size_t dims_;
    std::vector<double> grid_;
    std::vector<GradientEvaluator> evaluators_;
};

struct SamplerConfig {
    double lambda = 0.0;
    std::size_t n_particles = 1000;
    std::size_t langevin_steps = 0;
    double langevin_tau = 0.01;
    std::uint64_t seed = 0;
    bool clamp_to_domain = false;
    unsigned threads = 1;

    void validate() const;
};

struct SampleBatch {
    std::size_t d = 0;
    /// n_particles x d.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> z;
    /// Out-of-domain evaluation count per particle, -1 for particles stopped at a non-finite value.
    std::vector<long long> flags;
};

/// Per-particle counter-based stream: SplitMix64 keyed by (seed, particle), polar normals.
class ParticleRng {
public:
    ParticleRng(std::uint64_t seed, std::uint64_t particle);
    std::uint64_t next_u64();
    double uniform();
    double normal();

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Reverse-time sampling: an Euler-Maruyama step of the reverse OU process on the reversed
/// grid followed by `langevin_steps` unadjusted Langevin steps at the same score.
/// `domain` is used for clamping only; pass an empty span to disable.
SampleBatch reverse_sample(const ScoreModel& score, const SamplerConfig& scfg,
                           std::span<const std::pair<double, double>> domain = {});
SampleBatch reverse_sample(const Trajectory& traj, const PolySpace& space, const SamplerConfig& scfg,
                           const SolverConfig& cfg);

} // namespace tthjb
