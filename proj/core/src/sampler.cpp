#include "tthjb/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

#include "tthjb/hjb_operators.hpp"

namespace tthjb {

namespace {

std::uint64_t splitmix(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

GradientEvaluator::GradientEvaluator(const TensorTrain& coeffs, const PolySpace& space) : cores_(coeffs.cores()) {
    if (coeffs.dims() != space.dims()) throw ShapeError("snapshot does not match the space dimension");
    for (std::size_t i = 0; i < coeffs.dims(); ++i) {
        const Core& c = cores_[i];
        bases_.push_back(&space.basis(i, int(c.mode) - 1));
        offsets_.push_back(scratch_size_);
        scratch_size_ += 2 * c.left * c.right;
        max_mode_ = std::max(max_mode_, c.mode);
    }
}

void GradientEvaluator::contract(std::span<const double> x, std::vector<double>& scratch, bool derivs,
                                 std::size_t* outside) const {
    // layout: [V_0 D_0 V_1 D_1 ...][basis values][basis derivatives]
    scratch.assign(scratch_size_ + 2 * max_mode_, 0.0);
    double* vals = scratch.data() + scratch_size_;
    double* ders = vals + max_mode_;
    for (std::size_t i = 0; i < cores_.size(); ++i) {
        const LegendreBasis& B = *bases_[i];
        const Core& c = cores_[i];
        if (outside && (x[i] < B.a || x[i] > B.b)) ++*outside;
        evaluate_basis_both(B, x[i], {vals, c.mode}, {ders, c.mode});
        double* V = scratch.data() + offsets_[i];
        double* D = V + c.left * c.right;
        for (std::size_t l = 0; l < c.left; ++l)
            for (std::size_t a = 0; a < c.mode; ++a) {
                const double* row = &c.data[(l * c.mode + a) * c.right];
                double* v = V + l * c.right;
                double* dd = D + l * c.right;
                for (std::size_t r = 0; r < c.right; ++r) {
                    v[r] += vals[a] * row[r];
                    if (derivs) dd[r] += ders[a] * row[r];
                }
            }
    }
}

std::size_t GradientEvaluator::gradient(std::span<const double> x, std::span<double> g) const {
    const std::size_t d = dims();
    if (x.size() != d || g.size() != d) throw ShapeError("point or gradient has wrong dimension");
    thread_local std::vector<double> scratch, prefix, suffix, tmp;
    thread_local std::vector<std::size_t> start;
    std::size_t outside = 0;
    contract(x, scratch, true, &outside);

    // prefix[i] holds the row vector V_0 ... V_{i-1} (length left rank of core i)
    std::size_t total = 1;
    for (const Core& c : cores_) total += c.right;
    prefix.assign(total, 0.0);
    prefix[0] = 1.0;
    start.assign(d + 1, 0);
    for (std::size_t i = 0; i < d; ++i) {
        const Core& c = cores_[i];
        start[i + 1] = start[i] + c.left;
        const double* V = scratch.data() + offsets_[i];
        const double* in = prefix.data() + start[i];
        double* out = prefix.data() + start[i + 1];
        for (std::size_t l = 0; l < c.left; ++l)
            for (std::size_t r = 0; r < c.right; ++r) out[r] += in[l] * V[l * c.right + r];
    }
    suffix.assign(1, 1.0);
    for (std::size_t i = d; i-- > 0;) {
        const Core& c = cores_[i];
        const double* V = scratch.data() + offsets_[i];
        const double* D = V + c.left * c.right;
        const double* pre = prefix.data() + start[i];
        tmp.assign(c.left, 0.0);
        double gi = 0.0;
        for (std::size_t l = 0; l < c.left; ++l) {
            double dv = 0.0, vv = 0.0;
            for (std::size_t r = 0; r < c.right; ++r) {
                dv += D[l * c.right + r] * suffix[r];
                vv += V[l * c.right + r] * suffix[r];
            }
            gi += pre[l] * dv;
            tmp[l] = vv;
        }
        g[i] = gi;
        suffix.swap(tmp);
    }
    return outside;
}

double GradientEvaluator::value(std::span<const double> x) const {
    if (x.size() != dims()) throw ShapeError("point has wrong dimension");
    thread_local std::vector<double> scratch, w, tmp;
    contract(x, scratch, false, nullptr);
    w.assign(1, 1.0);
    for (std::size_t i = 0; i < cores_.size(); ++i) {
        const Core& c = cores_[i];
        const double* V = scratch.data() + offsets_[i];
        tmp.assign(c.right, 0.0);
        for (std::size_t l = 0; l < c.left; ++l)
            for (std::size_t r = 0; r < c.right; ++r) tmp[r] += w[l] * V[l * c.right + r];
        w.swap(tmp);
    }
    return w[0];
}

double eval_v(const SolutionSnapshot& snap, const PolySpace& space, std::span<const double> x) {
    if (x.size() != snap.coeffs.dims()) throw ShapeError("point has wrong dimension");
    std::vector<std::vector<double>> vs;
    for (std::size_t i = 0; i < x.size(); ++i)
        vs.push_back(evaluate_basis(space.basis(i, int(snap.coeffs.core(i).mode) - 1), x[i]));
    return tt_contract_mode_vectors(snap.coeffs, vs);
}

std::vector<double> grad_v(const SolutionSnapshot& snap, const PolySpace& space, std::span<const double> x) {
    std::vector<double> g(x.size());
    GradientEvaluator(snap.coeffs, space).gradient(x, g);
    return g;
}

double covariance_error(const SolutionSnapshot& snap, const PolySpace& space) {
    const QuadraticPart q = extract_quadratic(snap.coeffs, space);
    const Eigen::Index d = q.Q.rows();
    const Eigen::MatrixXd half = 0.5 * Eigen::MatrixXd::Identity(d, d);
    return (q.Q - half).norm() / half.norm();
}

TrajectoryScore::TrajectoryScore(const Trajectory& traj, const PolySpace& space, const SolverConfig& cfg,
                                 std::vector<double> grid)
    : dims_(space.dims()), grid_(std::move(grid)) {
    if (traj.snapshots.empty()) throw std::invalid_argument("empty trajectory");
    if (grid_.empty()) grid_ = traj.times();
    for (std::size_t k = 1; k < grid_.size(); ++k)
        if (!(grid_[k] > grid_[k - 1])) throw std::invalid_argument("sampling grid must be strictly increasing");
    const auto times = traj.times();
    for (double t : grid_) {
        auto it = std::lower_bound(times.begin(), times.end(), t);
        if (it != times.end() && *it == t)
            evaluators_.emplace_back(traj.snapshots[std::size_t(it - times.begin())].coeffs, space);
        else
            evaluators_.emplace_back(evaluate_at_time(traj, t, space, cfg).coeffs, space);
    }
}

std::size_t TrajectoryScore::grad_v(std::size_t k, std::span<const double> x, std::span<double> g) const {
    return evaluators_.at(k).gradient(x, g);
}

void SamplerConfig::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
    if (langevin_steps > 0 && !(langevin_tau > 0.0)) throw std::invalid_argument("langevin_tau must be positive");
    if (threads == 0) throw std::invalid_argument("threads must be at least 1");
}

ParticleRng::ParticleRng(std::uint64_t seed, std::uint64_t particle) {
    std::uint64_t s = seed;
    const std::uint64_t a = splitmix(s);
    std::uint64_t t = particle ^ 0x5851f42d4c957f2dULL;
    state_ = a ^ splitmix(t);
}

std::uint64_t ParticleRng::next_u64() { return splitmix(state_); }

double ParticleRng::uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

double ParticleRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

SampleBatch reverse_sample(const ScoreModel& score, const SamplerConfig& scfg,
                           std::span<const std::pair<double, double>> domain) {
    scfg.validate();
    const std::size_t d = score.dims();
    const auto& grid = score.grid();
    if (grid.empty()) throw std::invalid_argument("score model has an empty grid");
    const bool clamp = scfg.clamp_to_domain && !domain.empty();
    if (clamp && domain.size() != d) throw ShapeError("domain does not match the score dimension");

    SampleBatch batch;
    batch.d = d;
    batch.z.resize(Eigen::Index(scfg.n_particles), Eigen::Index(d));
    batch.flags.assign(scfg.n_particles, 0);
    const std::size_t N = grid.size() - 1;
    const double lam = scfg.lambda;

    auto run = [&](std::size_t begin, std::size_t end) {
        std::vector<double> z(d), g(d), last(d);
        for (std::size_t p = begin; p < end; ++p) {
            ParticleRng rng(scfg.seed, p);
            for (double& v : z) v = rng.normal();
            long long outside = 0;
            bool failed = false;
            auto clamp_all = [&] {
                if (!clamp) return;
                for (std::size_t i = 0; i < d; ++i) z[i] = std::clamp(z[i], domain[i].first, domain[i].second);
            };
            for (std::size_t n = 0; n < N && !failed; ++n) {
                last = z;
                const std::size_t k = N - n;
                const double tau = grid[k] - grid[k - 1];
                outside += (long long)score.grad_v(k, z, g);
                const double noise = lam < 1.0 ? std::sqrt(2.0 * (1.0 - lam) * tau) : 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    z[i] += (z[i] - (2.0 - lam) * g[i]) * tau;
                    if (lam < 1.0) z[i] += noise * rng.normal();
                }
                clamp_all();
                const double lnoise = std::sqrt(2.0 * scfg.langevin_tau);
                for (std::size_t l = 0; l < scfg.langevin_steps; ++l) {
                    outside += (long long)score.grad_v(k, z, g);
                    for (std::size_t i = 0; i < d; ++i) z[i] += -scfg.langevin_tau * g[i] + lnoise * rng.normal();
                    clamp_all();
                }
                for (double v : z)
                    if (!std::isfinite(v)) failed = true;
            }
            if (failed) z = last;
            for (std::size_t i = 0; i < d; ++i) batch.z(Eigen::Index(p), Eigen::Index(i)) = z[i];
            batch.flags[p] = failed ? -1 : outside;
        }
    };

    const std::size_t threads = std::min<std::size_t>(scfg.threads, std::max<std::size_t>(scfg.n_particles, 1));
    if (threads <= 1) {
        run(0, scfg.n_particles);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (scfg.n_particles + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk, e = std::min(scfg.n_particles, b + chunk);
            if (b < e) pool.emplace_back(run, b, e);
        }
        for (auto& th : pool) th.join();
    }

    const auto bad = std::count(batch.flags.begin(), batch.flags.end(), -1);
    if (scfg.n_particles > 0 && double(bad) > 0.1 * double(scfg.n_particles))
        throw std::runtime_error(std::to_string(bad) + " of " + std::to_string(scfg.n_particles) +
                                 " particles became non-finite");
    return batch;
}

SampleBatch reverse_sample(const Trajectory& traj, const PolySpace& space, const SamplerConfig& scfg,
                           const SolverConfig& cfg) {
    if (!traj.complete()) throw std::invalid_argument("trajectory did not reach the terminal time");
    const TrajectoryScore score(traj, space, cfg);
    return reverse_sample(score, scfg, space.intervals());
}

} // namespace tthjb
