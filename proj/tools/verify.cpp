#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "commands.hpp"
#include "tthjb/hjb_operators.hpp"
#include "tthjb/integrator.hpp"
#include "tthjb/oracles.hpp"
#include "tthjb/potential.hpp"
#include "tthjb/sampler.hpp"

namespace tthjb::cli {

namespace {

struct Check {
    std::string name;
    double value;
    double threshold;
    bool below;  // pass when value <= threshold, else value > threshold
    bool pass() const { return below ? value <= threshold : value > threshold; }
};

int report(const std::vector<Check>& checks, std::ostream& out) {
    bool all = true;
    char line[200];
    std::snprintf(line, sizeof line, "%-44s %14s %14s  %s\n", "check", "value", "threshold", "result");
    out << line;
    for (const auto& c : checks) {
        std::snprintf(line, sizeof line, "%-44s %14.6e %s%13.3e  %s\n", c.name.c_str(), c.value, c.below ? "<=" : "> ",
                      c.threshold, c.pass() ? "PASS" : "FAIL");
        out << line;
        all = all && c.pass();
    }
    return all ? 0 : 1;
}

std::vector<Check> gaussian_suite() {
    const std::size_t d = 4;
    const PolySpace space(std::vector<std::pair<double, double>>(d, {-5.0, 5.0}), std::vector<int>(d, 2));
    const Eigen::MatrixXd Q0 = random_spd_matrix(d, 7);
    SparsePoly poly;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<int> e(d, 0);
            ++e[i];
            ++e[j];
            poly[e] += Q0(Eigen::Index(i), Eigen::Index(j));
        }
    SolverConfig cfg;
    cfg.T = 12.0;
    cfg.tau_max = 0.1;
    cfg.rho = RhoSchedule::constant(0.2);
    const Trajectory traj = solve_hjb(build_poly_tt(poly, space, 1e-14), space, cfg);
    std::vector<Check> checks;
    checks.push_back({"solver reached T", traj.complete() ? 0.0 : 1.0, 0.0, true});
    const auto& last = traj.snapshots.back();
    checks.push_back({"final covariance error", covariance_error(last, space), 1e-9, true});
    std::size_t worst = 0;
    for (auto r : last.coeffs.interior_ranks()) worst = std::max(worst, r > 2 ? r - 2 : 2 - r);
    checks.push_back({"final ranks differ from 2 by", double(worst), 0.0, true});
    const QuadraticPart q = extract_quadratic(last.coeffs, space);
    const Eigen::MatrixXd ref = riccati_reference(Q0, cfg.T);
    checks.push_back({"final Q vs Riccati reference (rel)", (q.Q - ref).norm() / ref.norm(), 1e-9, true});
    return checks;
}

std::vector<Check> operators_suite() {
    const PolySpace space({{-1.0, 2.0}, {-3.0, 3.0}, {0.5, 2.5}}, {3, 2, 4});
    std::vector<Check> checks;
    double lin = 0, part = 0, mult = 0, nl = 0, nll = 0, proj = 0, rhs = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const TensorTrain a = random_tensor_train({4, 3, 5}, {2, 3}, seed);
        const TensorTrain b = random_tensor_train({4, 3, 5}, {3, 2}, seed + 100);
        const DenseTensor da = tt_to_dense(a), db = tt_to_dense(b);
        lin = std::max(lin, relative_error(tt_to_dense(apply_lin(a, space)), dense_apply_lin(da, space)));
        for (std::size_t i = 0; i < 3; ++i)
            part = std::max(part, relative_error(tt_to_dense(apply_partial(a, i, space)), dense_apply_partial(da, i, space)));
        mult = std::max(mult, relative_error(tt_to_dense(poly_multiply(a, b, space)), dense_poly_multiply(da, db, space)));
        nl = std::max(nl, relative_error(tt_to_dense(apply_nonlin(a, space)), dense_apply_nonlin(da, space)));
        nll = std::max(nll, relative_error(tt_to_dense(apply_nonlin_linearized(b, a, space)),
                                           dense_apply_nonlin_linearized(db, da, space)));
        const std::vector<int> n{2, 1, 3};
        proj = std::max(proj, relative_error(tt_to_dense(project_degree(a, n)), dense_project_degree(da, n)));
        rhs = std::max(rhs, relative_error(tt_to_dense(hjb_rhs(a, space)), dense_rhs_reference(da, space)));
    }
    checks.push_back({"apply_lin vs dense", lin, 1e-9, true});
    checks.push_back({"apply_partial vs dense", part, 1e-9, true});
    checks.push_back({"poly_multiply vs dense", mult, 1e-9, true});
    checks.push_back({"apply_nonlin vs dense", nl, 1e-9, true});
    checks.push_back({"apply_nonlin_linearized vs dense", nll, 1e-9, true});
    checks.push_back({"project_degree vs dense", proj, 1e-9, true});
    checks.push_back({"hjb_rhs vs dense", rhs, 1e-9, true});
    return checks;
}

// g = 1/2 sum a_ii x_i^2 on [-5, 5]^d at degree 2.
TensorTrain diagonal_gaussian(const std::vector<double>& a, const PolySpace& space) {
    SparsePoly poly;
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::vector<int> e(a.size(), 0);
        e[i] = 2;
        poly[e] = 0.5 * a[i];
    }
    return build_poly_tt(poly, space, 1e-14);
}

std::vector<Check> eigen_suite() {
    std::vector<Check> checks;
    {
        const std::vector<double> a{2.0};
        const PolySpace space({{-5.0, 5.0}}, {2});
        SolverConfig cfg;
        const auto r = power_iteration_bound({0.0, diagonal_gaussian(a, space)}, space, cfg);
        const double bound = gaussian_eigen_bound(a);
        checks.push_back({"a=(2): bound formula - 6", std::abs(bound - 6.0), 0.0, true});
        checks.push_back({"a=(2): power iteration vs bound (rel)", std::abs(r.lambda_bar - bound) / bound, 1e-2, true});
    }
    {
        const std::vector<double> a{1.0, 2.0, 3.0};
        const PolySpace space(std::vector<std::pair<double, double>>(3, {-5.0, 5.0}), {2, 2, 2});
        const Eigen::MatrixXd H = dense_stiffness_matrix(tt_to_dense(diagonal_gaussian(a, space)), space);
        const double top = Eigen::EigenSolver<Eigen::MatrixXd>(H).eigenvalues().cwiseAbs().maxCoeff();
        const double bound = gaussian_eigen_bound(a);
        checks.push_back({"a=(1,2,3): dense 27x27 max|eig| vs 18 (rel)", std::abs(top - bound) / bound, 1e-2, true});
    }
    {
        const std::vector<double> a{0.5, 0.5, 0.5};
        checks.push_back({"a=(1/2,1/2,1/2): bound", gaussian_eigen_bound(a), 0.0, true});
    }
    return checks;
}

std::vector<Check> quadrature_suite() {
    PotentialSpec spec;
    spec.builtins.push_back({"doublewell", {0, 1}, std::nullopt, std::nullopt, std::nullopt});
    const std::array<std::pair<double, double>, 2> dom{{{-2.0, 2.0}, {-2.0, 2.0}}};
    const QuadratureScore2d q3(spec, 3, dom), q50(spec, 50, dom), q200(spec, 200, dom);
    // the tilt of the double well shifts the mean, so the t -> infinity check uses the symmetric well
    PotentialSpec symmetric;
    symmetric.terms.push_back({{0, 1}, {{{4, 0}, 1.0}, {{0, 4}, 1.0}, {{2, 0}, -4.0}, {{0, 2}, -4.0}}});
    const QuadratureScore2d sym(symmetric, 50, dom);
    ParticleRng rng(11, 0);
    double self = 0.0, coarse = 0.0, asym = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double x[2] = {rng.normal(), rng.normal()};
        const auto a = q50(0.5, x), b = q200(0.5, x), c = q3(0.5, x);
        const double nb = std::hypot(b.grad[0], b.grad[1]);
        self = std::max(self, std::hypot(a.grad[0] - b.grad[0], a.grad[1] - b.grad[1]) / std::max(nb, 1e-12));
        coarse = std::max(coarse, std::hypot(c.grad[0] - a.grad[0], c.grad[1] - a.grad[1]) /
                                      std::max(std::hypot(a.grad[0], a.grad[1]), 1e-12));
        const double y[2] = {0.3 * rng.normal(), 0.3 * rng.normal()};
        const auto s = sym(5.0, y);
        asym = std::max(asym, std::hypot(s.grad[0] - y[0], s.grad[1] - y[1]));
    }
    return {{"Q=50 vs Q=200 gradients at t=0.5 (rel)", self, 1e-6, true},
            {"t=5, symmetric well: |grad v - x|", asym, 1e-3, true},
            {"Q=3 vs Q=50 gradients at t=0.5 (rel)", coarse, 0.1, false}};
}

} // namespace

int cmd_verify(const std::string& suite, std::ostream& out, std::ostream& err) {
    const std::vector<std::pair<std::string, std::function<std::vector<Check>()>>> suites{
        {"gaussian", gaussian_suite}, {"operators", operators_suite}, {"eigen", eigen_suite}, {"quadrature", quadrature_suite}};
    for (const auto& [name, run] : suites) {
        if (name != suite) continue;
        try {
            return report(run(), out);
        } catch (const std::exception& e) {
            err << "verify " << suite << ": " << e.what() << '\n';
            return 1;
        }
    }
    err << "unknown suite '" << suite << "'\nusage: tthjb verify {gaussian|operators|eigen|quadrature}\n";
    return 1;
}

} // namespace tthjb::cli
