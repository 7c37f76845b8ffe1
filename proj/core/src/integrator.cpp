#include "tthjb/integrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tthjb/hjb_operators.hpp"
#include "tthjb/sampler.hpp"

namespace tthjb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (decimal exponent, leading p digits) of |x|; equal pairs mean the first p digits agree.
std::pair<long, long long> significant_digits(double x, int p) {
    const double ax = std::abs(x);
    if (ax == 0.0) return {0, 0};
    const long e = long(std::floor(std::log10(ax)));
    long long m = std::llround(ax * std::pow(10.0, double(p - 1 - e)));
    long e2 = e;
    if (m >= static_cast<long long>(std::pow(10.0, p))) {
        m /= 10;
        ++e2;
    }
    return {x < 0 ? -e2 - 1000 : e2, m};
}

TensorTrain normalized(const TensorTrain& x, double norm) { return tt_scale(x, 1.0 / norm); }

} // namespace

double RhoSchedule::at(double t) const {
    if (pieces.empty()) throw std::invalid_argument("rho schedule is empty");
    double rho = pieces.front().second;
    for (const auto& [start, value] : pieces)
        if (t >= start) rho = value;
    return rho;
}

void SolverConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
    };
    positive(T, "T");
    positive(tau_max, "tau_max");
    positive(delta_proj, "delta_proj");
    positive(delta_rank, "delta_rank");
    positive(delta_contr, "delta_contr");
    if (p_digits < 1) throw std::invalid_argument("p_digits must be at least 1");
    if (power_max_iters < 1) throw std::invalid_argument("power_max_iters must be at least 1");
    if (rho.pieces.empty()) throw std::invalid_argument("rho schedule is empty");
    double last = -kInf;
    for (const auto& [start, value] : rho.pieces) {
        if (!(value > 0.0 && value < 1.0)) throw std::invalid_argument("rho values must lie in (0, 1)");
        if (!(start > last)) throw std::invalid_argument("rho schedule start times must increase");
        last = start;
    }
}

std::vector<int> SolutionSnapshot::degrees() const { return degrees_of(coeffs); }

std::vector<double> Trajectory::times() const {
    std::vector<double> t;
    for (const auto& s : snapshots) t.push_back(s.t);
    return t;
}

PowerIterationResult power_iteration_bound(const SolutionSnapshot& y, const PolySpace& space, const SolverConfig& cfg) {
    const TensorTrain& Y = y.coeffs;
    const auto cap = Y.interior_ranks();
    PowerIterationResult res;
    TensorTrain x = Y;
    double norm = tt_norm(x);
    if (norm == 0.0) {
        res.stationary = true;
        return res;
    }
    std::pair<long, long long> prev{0, -1};
    for (int k = 0; k < cfg.power_max_iters; ++k) {
        const TensorTrain xh = normalized(x, norm);
        TensorTrain next = apply_stiffness(Y, xh, space);
        if (Y.dims() > 1) next = tt_round(next, RoundSpec::ranks(cap));
        res.lambda = tt_inner(xh, next);
        res.iters = k + 1;
        if (!std::isfinite(res.lambda)) throw std::runtime_error("power iteration produced a non-finite value");
        norm = tt_norm(next);
        if (norm == 0.0 || std::abs(res.lambda) < 1e-14) {
            res.stationary = true;
            res.lambda_bar = 0.0;
            return res;
        }
        const auto digits = significant_digits(res.lambda, cfg.p_digits);
        x = std::move(next);
        if (digits == prev) break;
        prev = digits;
    }
    const double a = std::abs(res.lambda);
    const double P = std::ceil(-std::log10(a));
    res.lambda_bar = a + std::pow(10.0, -(P + cfg.p_digits));
    return res;
}

double stepsize_stiffness(double lambda_bar, double rho) {
    if (lambda_bar == 0.0) return kInf;
    return 2.0 * rho / std::abs(lambda_bar);
}

double stepsize_stiffness(const PowerIterationResult& bound, double rho) {
    return bound.stationary ? kInf : stepsize_stiffness(bound.lambda_bar, rho);
}

double stepsize_projection(double rel_err, const SolverConfig& cfg) {
    return rel_err == 0.0 ? cfg.tau_max : std::min(cfg.tau_max, cfg.delta_proj / rel_err);
}

ProjectionStep stepsize_projection(const SolutionSnapshot& y, const PolySpace& space, const SolverConfig& cfg,
                                   const TensorTrain* nl) {
    const TensorTrain full = nl ? *nl : apply_nonlin(y.coeffs, space);
    const double nl_norm = tt_norm(full);
    ProjectionStep out;
    if (nl_norm == 0.0) {
        out.tau_proj = cfg.tau_max;
        return out;
    }
    const auto n = y.degrees();
    const TensorTrain back = resize_degrees(project_degree(full, n), degrees_of(full));
    out.rel_err = tt_norm(tt_add_scaled(full, back, -1.0)) / nl_norm;
    out.tau_proj = stepsize_projection(out.rel_err, cfg);
    return out;
}

double retraction_error(const TensorTrain& y, const TensorTrain& rhs, const std::vector<std::size_t>& target_ranks,
                        double tau) {
    const TensorTrain ybar = tt_add_scaled(y, rhs, tau);
    if (y.dims() == 1) return 0.0;
    const double nb = tt_norm(ybar);
    if (nb == 0.0) return 0.0;
    const TensorTrain r = tt_round(ybar, RoundSpec::ranks(target_ranks));
    return tt_norm(tt_add_scaled(ybar, r, -1.0)) / nb;
}

double stepsize_retraction(const TensorTrain& y, const TensorTrain& rhs, const std::vector<std::size_t>& target_ranks,
                           double tau_init, const SolverConfig& cfg) {
    if (!(tau_init > 0.0)) throw std::invalid_argument("tau_init must be positive");
    auto ok = [&](double tau) { return retraction_error(y, rhs, target_ranks, tau) <= cfg.delta_rank; };
    if (ok(tau_init)) return tau_init;
    double lo = 0.0;
    for (int k = 1; k <= 40; ++k) {
        const double tau = tau_init * std::ldexp(1.0, -k);
        if (ok(tau)) {
            lo = tau;
            break;
        }
    }
    if (lo == 0.0) throw RankBudgetError("retraction tolerance violated even at tau_init * 2^-40; rank budget too small");
    double hi = 2.0 * lo;
    for (int it = 0; it < 20 && (hi - lo) > 1e-2 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ok(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

SolutionSnapshot euler_step(const SolutionSnapshot& y, double tau, const std::vector<std::size_t>& target_ranks,
                            const PolySpace& space, const SolverConfig& cfg, const TensorTrain* rhs) {
    if (tau < 0.0) throw std::invalid_argument("step size must be nonnegative");
    const TensorTrain f = rhs ? *rhs : hjb_rhs(y.coeffs, space);
    TensorTrain ybar = tt_add_scaled(y.coeffs, f, tau);
    if (!ybar.all_finite()) throw std::runtime_error("Euler step produced non-finite coefficients");
    SolutionSnapshot out;
    out.t = y.t + tau;
    out.coeffs = y.coeffs.dims() > 1 ? tt_round(ybar, RoundSpec::both(cfg.delta_contr, target_ranks)) : std::move(ybar);
    return out;
}

std::vector<double> top_degree_slice_norms(const TensorTrain& a) {
    const std::size_t d = a.dims();
    std::vector<double> norms(d, 0.0);
    TensorTrain x = a;
    right_orthogonalize(x, 0);
    for (std::size_t k = 0; k < d; ++k) {
        // Cores before k are left-orthogonal, cores after k right-orthogonal.
        const Core& c = x.core(k);
        norms[k] = c.slice(c.mode - 1).norm();
        if (k + 1 < d) orthogonalize_core_left(x, k);
    }
    return norms;
}

SolutionSnapshot degree_truncate(const SolutionSnapshot& y, double delta_contr) {
    SolutionSnapshot out = y;
    bool changed = true;
    while (changed) {
        changed = false;
        const auto norms = top_degree_slice_norms(out.coeffs);
        for (std::size_t k = 0; k < norms.size(); ++k) {
            const std::size_t mode = out.coeffs.core(k).mode;
            if (mode > 3 && norms[k] <= delta_contr) {
                out.coeffs = tt_resize_mode(out.coeffs, k, mode - 1);
                changed = true;
            }
        }
    }
    return out;
}

std::vector<std::size_t> rank_budget(const std::vector<std::size_t>& current, const std::vector<std::size_t>& r0) {
    std::vector<std::size_t> r(current.size());
    for (std::size_t i = 0; i < current.size(); ++i) {
        const std::size_t cap = std::max<std::size_t>(i < r0.size() ? r0[i] : 2, 2);
        r[i] = std::min(std::max<std::size_t>(current[i], 2), cap);
    }
    return r;
}

SolutionSnapshot rank_adapt(const SolutionSnapshot& y, const std::vector<std::size_t>& r0, double delta_contr) {
    SolutionSnapshot out = y;
    if (y.coeffs.dims() > 1)
        out.coeffs = tt_round(y.coeffs, RoundSpec::both(delta_contr, rank_budget(y.coeffs.interior_ranks(), r0)));
    return out;
}

Trajectory solve_hjb(const TensorTrain& phi, const PolySpace& space, const SolverConfig& cfg, const StepObserver& observer) {
    cfg.validate();
    if (phi.dims() != space.dims()) throw ShapeError("initial condition does not match the space dimension");
    if (!phi.all_finite()) throw std::invalid_argument("initial condition has non-finite coefficients");

    Trajectory traj;
    traj.initial_ranks = phi.interior_ranks();
    SolutionSnapshot y{0.0, phi};
    traj.snapshots.push_back(y);

    using clock = std::chrono::steady_clock;
    for (std::size_t step = 1; y.t < cfg.T; ++step) {
        const auto start = clock::now();
        StepRecord rec;
        rec.step = step;
        try {
            const PowerIterationResult pi = power_iteration_bound(y, space, cfg);
            rec.lambda_bar = pi.lambda_bar;
            rec.tau_lambda = stepsize_stiffness(pi, cfg.rho.at(y.t));

            TensorTrain nl;
            const TensorTrain rhs = hjb_rhs(y.coeffs, space, &nl);
            rec.tau_proj = stepsize_projection(y, space, cfg, &nl).tau_proj;

            const auto target = rank_budget(y.coeffs.interior_ranks(), traj.initial_ranks);
            // Seeding with the previous step would forbid the step from ever growing again.
            const double tau_init = std::min({cfg.tau_max, rec.tau_lambda, rec.tau_proj, cfg.T - y.t});
            rec.tau_rank = stepsize_retraction(y.coeffs, rhs, target, tau_init, cfg);

            const double remaining = cfg.T - y.t;
            double tau = std::min({cfg.tau_max, rec.tau_lambda, rec.tau_proj, rec.tau_rank});
            // a remainder left over from rounding is absorbed rather than stepped on its own
            const bool last = tau >= remaining - 1e-10 * cfg.T;
            if (last) tau = remaining;
            if (tau < 1e-12 * cfg.T) throw std::runtime_error("step size underflow at t = " + std::to_string(y.t));
            rec.tau = tau;

            SolutionSnapshot next = euler_step(y, tau, target, space, cfg, &rhs);
            next.t = last ? cfg.T : y.t + tau;
            if (!(next.t > y.t)) throw std::runtime_error("time did not advance at t = " + std::to_string(y.t));
            next = degree_truncate(next, cfg.delta_contr);
            next = rank_adapt(next, traj.initial_ranks, cfg.delta_contr);
            if (!next.coeffs.all_finite()) throw std::runtime_error("non-finite state at t = " + std::to_string(next.t));

            rec.t = next.t;
            rec.ranks = next.coeffs.ranks();
            rec.degrees = next.degrees();
            rec.cov_err = covariance_error(next, space);
            if (cfg.record_timing)
                rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
            y = std::move(next);
            traj.snapshots.push_back(y);
            traj.diagnostics.push_back(rec);
            if (observer) observer(rec, y);
        } catch (const std::exception& e) {
            traj.error = e.what();
            break;
        }
    }
    return traj;
}

SolutionSnapshot evaluate_at_time(const Trajectory& traj, double t_star, const PolySpace& space, const SolverConfig& cfg) {
    if (traj.snapshots.empty()) throw std::invalid_argument("empty trajectory");
    if (!(t_star >= traj.snapshots.front().t) || t_star > traj.snapshots.back().t)
        throw std::out_of_range("time " + std::to_string(t_star) + " outside the trajectory range");
    auto it = std::upper_bound(traj.snapshots.begin(), traj.snapshots.end(), t_star,
                               [](double t, const SolutionSnapshot& s) { return t < s.t; });
    const SolutionSnapshot& base = *std::prev(it);
    if (base.t == t_star) return base;
    const auto r0 = traj.initial_ranks.empty() ? base.coeffs.interior_ranks() : traj.initial_ranks;
    SolutionSnapshot out = euler_step(base, t_star - base.t, rank_budget(base.coeffs.interior_ranks(), r0), space, cfg);
    out.t = t_star;
    return out;
}

} // namespace tthjb
