#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tthjb/poly_basis.hpp"
#include "tthjb/tensor_train.hpp"

namespace tthjb {

/// Piecewise-constant rho(t): each piece is (start time, rho), sorted by start time.
struct RhoSchedule {
    std::vector<std::pair<double, double>> pieces{{0.0, 0.2}};

    static RhoSchedule constant(double rho) { return {{{0.0, rho}}}; }
    double at(double t) const;
};

struct SolverConfig {
    double T = 1.0;
    double tau_max = 0.1;
    RhoSchedule rho;
    double delta_proj = 0.01;
    double delta_rank = 0.01;
    double delta_contr = 1e-8;
    int p_digits = 2;
    int power_max_iters = 50;
    std::uint64_t seed = 0;
    /// Wall-clock timings make diagnostics non-reproducible, so they are opt-in.
    bool record_timing = false;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct SolutionSnapshot {
    double t = 0.0;
    TensorTrain coeffs;

    std::vector<int> degrees() const;
    std::vector<std::size_t> ranks() const { return coeffs.ranks(); }
};

struct StepRecord {
    std::size_t step = 0;
    double t = 0.0;
    double tau = 0.0;
    double tau_lambda = 0.0;
    double tau_proj = 0.0;
    double tau_rank = 0.0;
    double lambda_bar = 0.0;
    std::vector<std::size_t> ranks;
    std::vector<int> degrees;
    double cov_err = 0.0;
    double wall_ms = 0.0;
};

struct Trajectory {
    std::vector<SolutionSnapshot> snapshots;
    std::vector<StepRecord> diagnostics;
    std::vector<std::size_t> initial_ranks;
    /// Set when the solve stopped before reaching T.
    std::optional<std::string> error;

    bool complete() const { return !error.has_value(); }
    std::vector<double> times() const;
};

/// Raised when even a heavily reduced step violates the retraction tolerance.
class RankBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PowerIterationResult {
    double lambda = 0.0;      // last Rayleigh-type estimate
    double lambda_bar = 0.0;  // |lambda| + eps_p, or 0 when stationary
    int iters = 0;
    bool stationary = false;
};

PowerIterationResult power_iteration_bound(const SolutionSnapshot& y, const PolySpace& space, const SolverConfig& cfg);

/// 2 rho / lambda_bar; +infinity for the stationary flag.
double stepsize_stiffness(const PowerIterationResult& bound, double rho);
double stepsize_stiffness(double lambda_bar, double rho);

struct ProjectionStep {
    double tau_proj = 0.0;
    double rel_err = 0.0;
};

/// Relative degree-projection error of NL(Y). `nl` may carry a precomputed NL(Y).
ProjectionStep stepsize_projection(const SolutionSnapshot& y, const PolySpace& space, const SolverConfig& cfg,
                                   const TensorTrain* nl = nullptr);
/// Step-size bound from a relative projection error.
double stepsize_projection(double rel_err, const SolverConfig& cfg);

/// Relative retraction error of Y + tau * rhs when rounded to `target_ranks`.
double retraction_error(const TensorTrain& y, const TensorTrain& rhs, const std::vector<std::size_t>& target_ranks,
                        double tau);

/// Largest tau <= tau_init whose retraction error stays within delta_rank.
double stepsize_retraction(const TensorTrain& y, const TensorTrain& rhs, const std::vector<std::size_t>& target_ranks,
                           double tau_init, const SolverConfig& cfg);

/// Explicit Euler step, retraction to `target_ranks`, rounding at relative delta_contr.
/// `rhs` may carry a precomputed L Y + P NL(Y).
SolutionSnapshot euler_step(const SolutionSnapshot& y, double tau, const std::vector<std::size_t>& target_ranks,
                            const PolySpace& space, const SolverConfig& cfg, const TensorTrain* rhs = nullptr);

/// Frobenius norms of the top-degree slice in each dimension.
std::vector<double> top_degree_slice_norms(const TensorTrain& a);
SolutionSnapshot degree_truncate(const SolutionSnapshot& y, double delta_contr);

/// Componentwise max(r, 2) capped by max(r0, 2).
std::vector<std::size_t> rank_budget(const std::vector<std::size_t>& current, const std::vector<std::size_t>& r0);
SolutionSnapshot rank_adapt(const SolutionSnapshot& y, const std::vector<std::size_t>& r0, double delta_contr);

/// Called after every accepted step with the step record and the new snapshot.
using StepObserver = std::function<void(const StepRecord&, const SolutionSnapshot&)>;

Trajectory solve_hjb(const TensorTrain& phi, const PolySpace& space, const SolverConfig& cfg,
                     const StepObserver& observer = {});

/// Snapshot at an arbitrary time, bridging from the nearest stored time below by one step.
SolutionSnapshot evaluate_at_time(const Trajectory& traj, double t_star, const PolySpace& space, const SolverConfig& cfg);

} // namespace tthjb
