#include "tthjb/potential.hpp"

#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <nlohmann/json.hpp>

namespace tthjb {

namespace {

using json = nlohmann::json;

// Polynomials in a handful of local variables, used while expanding built-ins.
struct LocalPoly {
    std::size_t vars = 0;
    SparsePoly terms;

    static LocalPoly constant(std::size_t vars, double c) {
        LocalPoly p{vars, {}};
        if (c != 0.0) p.terms[std::vector<int>(vars, 0)] = c;
        return p;
    }
    static LocalPoly variable(std::size_t vars, std::size_t i, double c = 1.0) {
        LocalPoly p{vars, {}};
        std::vector<int> e(vars, 0);
        e[i] = 1;
        p.terms[e] = c;
        return p;
    }
    LocalPoly& operator+=(const LocalPoly& o) {
        for (const auto& [e, c] : o.terms) terms[e] += c;
        return *this;
    }
    LocalPoly operator*(const LocalPoly& o) const {
        LocalPoly p{vars, {}};
        for (const auto& [e1, c1] : terms)
            for (const auto& [e2, c2] : o.terms) {
                std::vector<int> e(vars);
                for (std::size_t i = 0; i < vars; ++i) e[i] = e1[i] + e2[i];
                p.terms[e] += c1 * c2;
            }
        return p;
    }
    LocalPoly scaled(double s) const {
        LocalPoly p = *this;
        for (auto& [e, c] : p.terms) c *= s;
        return p;
    }
};

LocalPoly pure_powers(std::initializer_list<std::tuple<std::size_t, int, double>> parts, std::size_t vars, double constant) {
    LocalPoly p = LocalPoly::constant(vars, constant);
    for (auto [i, k, c] : parts) {
        std::vector<int> e(vars, 0);
        e[i] = k;
        p.terms[e] += c;
    }
    return p;
}

void embed(SparsePoly& out, const SparsePoly& local, const std::vector<std::size_t>& coords, std::size_t d) {
    for (const auto& [e, c] : local) {
        if (c == 0.0) continue;
        std::vector<int> full(d, 0);
        for (std::size_t k = 0; k < coords.size(); ++k) full[coords[k]] += e[k];
        out[full] += c;
    }
}

void check_coords(const std::vector<std::size_t>& coords, std::size_t d, const std::string& what) {
    for (std::size_t c : coords)
        if (c >= d) throw std::invalid_argument(what + ": coordinate " + std::to_string(c) + " out of range");
}

std::vector<std::size_t> default_coords(const BuiltinTerm& b, std::size_t d, std::size_t expected) {
    if (!b.coords.empty()) {
        if (expected && b.coords.size() != expected)
            throw std::invalid_argument(b.name + " expects " + std::to_string(expected) + " coordinates");
        return b.coords;
    }
    if (expected) {
        if (d < expected) throw std::invalid_argument(b.name + " needs " + std::to_string(expected) + " dimensions");
        std::vector<std::size_t> c(expected);
        for (std::size_t i = 0; i < expected; ++i) c[i] = i;
        return c;
    }
    std::vector<std::size_t> c(d);
    for (std::size_t i = 0; i < d; ++i) c[i] = i;
    return c;
}

LocalPoly quadratic_form(const Eigen::MatrixXd& Q) {
    const std::size_t n = std::size_t(Q.rows());
    LocalPoly p{n, {}};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<int> e(n, 0);
            e[i] += 1;
            e[j] += 1;
            p.terms[e] += Q(Eigen::Index(i), Eigen::Index(j));
        }
    return p;
}

SparsePoly expand_builtin(const BuiltinTerm& b, std::size_t d) {
    SparsePoly out;
    if (b.name == "gaussian") {
        const auto coords = default_coords(b, d, 0);
        Eigen::MatrixXd Q;
        if (b.matrix) {
            Q = *b.matrix;
        } else if (b.seed) {
            Q = random_spd_matrix(coords.size(), *b.seed);
        } else {
            throw std::invalid_argument("gaussian needs a matrix or a seed");
        }
        if (std::size_t(Q.rows()) != coords.size() || Q.rows() != Q.cols())
            throw std::invalid_argument("gaussian matrix must be square with one row per coordinate");
        const Eigen::MatrixXd sym = 0.5 * (Q + Q.transpose());
        embed(out, quadratic_form(sym).terms, coords, d);
    } else if (b.name == "banana") {
        const auto coords = default_coords(b, d, 2);
        const Eigen::Matrix2d sigma = b.sigma.value_or((Eigen::Matrix2d() << 1.0, 0.9, 0.9, 1.0).finished());
        const Eigen::Matrix2d S = sigma.inverse();
        const LocalPoly u1 = LocalPoly::variable(2, 0);
        const LocalPoly u2 = pure_powers({{1, 1, 1.0}, {0, 2, 1.0}}, 2, 1.0);
        LocalPoly phi{2, {}};
        for (int k = 0; k < 2; ++k) {
            LocalPoly z = u1.scaled(S(k, 0));
            z += u2.scaled(S(k, 1));
            phi += (z * z).scaled(0.5);
        }
        embed(out, phi.terms, coords, d);
    } else if (b.name == "doublewell") {
        const auto coords = default_coords(b, d, 2);
        LocalPoly phi = pure_powers({{0, 4, 1.0}, {1, 4, 1.0}, {0, 2, -4.0}, {1, 2, -4.0}, {0, 1, -0.4}, {1, 1, 0.1}}, 2, 8.0);
        embed(out, phi.terms, coords, d);
    } else if (b.name == "sextic") {
        const auto coords = default_coords(b, d, 2);
        LocalPoly phi = pure_powers({{0, 6, 1.0}, {1, 6, 1.0}}, 2, 0.0);
        phi += (LocalPoly::variable(2, 0) * LocalPoly::variable(2, 1)).scaled(3.0);
        embed(out, phi.terms, coords, d);
    } else if (b.name == "iso_tail") {
        const auto coords = default_coords(b, d, 0);
        for (std::size_t c : coords) {
            std::vector<int> e(d, 0);
            e[c] = 2;
            out[e] += 1.0;
        }
    } else {
        throw std::invalid_argument("unknown builtin '" + b.name + "'");
    }
    return out;
}

std::vector<std::size_t> parse_coords(const json& j, const std::string& ptr) {
    if (!j.is_array()) throw SchemaError(ptr, "expected an array of coordinate indices");
    std::vector<std::size_t> c;
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number_integer() || j[k].get<long long>() < 0)
            throw SchemaError(ptr + "/" + std::to_string(k), "expected a nonnegative integer");
        c.push_back(j[k].get<std::size_t>());
    }
    return c;
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& ptr) {
    if (!j.is_array() || j.empty()) throw SchemaError(ptr, "expected a nonempty array of rows");
    const std::size_t n = j.size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const std::string rp = ptr + "/" + std::to_string(r);
        if (!j[r].is_array() || j[r].size() != n) throw SchemaError(rp, "expected a row of length " + std::to_string(n));
        for (std::size_t c = 0; c < n; ++c) {
            if (!j[r][c].is_number()) throw SchemaError(rp + "/" + std::to_string(c), "expected a number");
            m(Eigen::Index(r), Eigen::Index(c)) = j[r][c].get<double>();
        }
    }
    return m;
}

} // namespace

Eigen::MatrixXd random_spd_matrix(std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd A(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = double(rng() >> 11) * 0x1.0p-53;
    return A.transpose() * A + 0.1 * Eigen::MatrixXd::Identity(Eigen::Index(d), Eigen::Index(d));
}

SparsePoly expand_potential(const PotentialSpec& spec, std::size_t d) {
    SparsePoly out;
    for (std::size_t t = 0; t < spec.terms.size(); ++t) {
        const PolyTerm& term = spec.terms[t];
        check_coords(term.coords, d, "term " + std::to_string(t));
        SparsePoly local;
        for (const auto& m : term.poly) {
            if (m.exps.size() != term.coords.size())
                throw std::invalid_argument("term " + std::to_string(t) + ": exponent count differs from coords");
            for (int e : m.exps)
                if (e < 0) throw std::invalid_argument("term " + std::to_string(t) + ": negative exponent");
            local[m.exps] += m.coef;
        }
        embed(out, local, term.coords, d);
    }
    for (const auto& b : spec.builtins) {
        check_coords(b.coords, d, b.name);
        for (const auto& [e, c] : expand_builtin(b, d)) out[e] += c;
    }
    std::erase_if(out, [](const auto& kv) { return kv.second == 0.0; });
    return out;
}

TensorTrain build_poly_tt(const SparsePoly& poly, const PolySpace& space, double delta) {
    const std::size_t d = space.dims();
    const auto modes = space.mode_sizes();
    // Legendre coefficients of x_i^k for each dimension and power.
    std::vector<std::vector<std::vector<double>>> mono(d);
    for (std::size_t i = 0; i < d; ++i) {
        const LegendreBasis& B = space.basis(i);
        for (int k = 0; k <= B.n; ++k) {
            std::vector<double> e(std::size_t(k) + 1, 0.0);
            e[std::size_t(k)] = 1.0;
            mono[i].push_back(B.from_monomials(e));
        }
    }
    TensorTrain acc = TensorTrain::zeros(modes);
    std::size_t pending = 0;
    for (const auto& [e, c] : poly) {
        if (e.size() != d) throw std::invalid_argument("monomial has wrong dimension");
        std::vector<std::vector<double>> factors(d);
        for (std::size_t i = 0; i < d; ++i) {
            if (e[i] > space.degrees()[i])
                throw std::domain_error("monomial degree " + std::to_string(e[i]) + " in dimension " + std::to_string(i) +
                                        " exceeds the space degree " + std::to_string(space.degrees()[i]));
            factors[i] = mono[i][std::size_t(e[i])];
        }
        acc = tt_add_scaled(acc, TensorTrain::rank_one(factors), c);
        if (++pending >= 12) {
            acc = tt_round(acc, RoundSpec::tolerance(delta * 1e-2));
            pending = 0;
        }
    }
    return tt_round(acc, RoundSpec::tolerance(delta));
}

TensorTrain build_potential_tt(const PotentialSpec& spec, const PolySpace& space, double delta) {
    return build_poly_tt(expand_potential(spec, space.dims()), space, delta);
}

double evaluate_poly(const SparsePoly& poly, std::span<const double> x) {
    double s = 0.0;
    for (const auto& [e, c] : poly) {
        double m = c;
        for (std::size_t i = 0; i < e.size(); ++i) m *= std::pow(x[i], e[i]);
        s += m;
    }
    return s;
}

bool has_quadratic_floor(const SparsePoly& poly, std::size_t d, std::string* why) {
    for (std::size_t i = 0; i < d; ++i) {
        int top_pure = -1;
        double top_coef = 0.0;
        int top_any = 0;
        for (const auto& [e, c] : poly) {
            top_any = std::max(top_any, e[i]);
            bool pure = true;
            for (std::size_t k = 0; k < d; ++k)
                if (k != i && e[k] != 0) pure = false;
            if (pure && e[i] > top_pure && e[i] > 0) {
                top_pure = e[i];
                top_coef = c;
            }
        }
        if (top_pure < 2 || top_pure % 2 != 0 || top_coef <= 0.0 || top_any > top_pure) {
            if (why) *why = "coordinate " + std::to_string(i) + " lacks a positive even leading power";
            return false;
        }
    }
    return true;
}

PotentialSpec parse_potential(const json& j, const std::string& base) {
    if (!j.is_object()) throw SchemaError(base, "potential must be an object");
    PotentialSpec spec;
    for (const auto& [key, value] : j.items())
        if (key != "terms" && key != "builtins") throw SchemaError(base + "/" + key, "unknown key");
    if (j.contains("terms")) {
        const json& terms = j.at("terms");
        const std::string tp = base + "/terms";
        if (!terms.is_array()) throw SchemaError(tp, "expected an array");
        for (std::size_t t = 0; t < terms.size(); ++t) {
            const std::string p = tp + "/" + std::to_string(t);
            const json& term = terms[t];
            if (!term.is_object() || !term.contains("coords") || !term.contains("poly"))
                throw SchemaError(p, "term needs 'coords' and 'poly'");
            PolyTerm pt;
            pt.coords = parse_coords(term.at("coords"), p + "/coords");
            const json& poly = term.at("poly");
            if (!poly.is_array()) throw SchemaError(p + "/poly", "expected an array");
            for (std::size_t k = 0; k < poly.size(); ++k) {
                const std::string mp = p + "/poly/" + std::to_string(k);
                const json& m = poly[k];
                if (!m.is_object() || !m.contains("exps") || !m.contains("coef"))
                    throw SchemaError(mp, "monomial needs 'exps' and 'coef'");
                if (!m.at("coef").is_number()) throw SchemaError(mp + "/coef", "expected a number");
                MonomialTerm mt;
                const auto exps = parse_coords(m.at("exps"), mp + "/exps");
                if (exps.size() != pt.coords.size()) throw SchemaError(mp + "/exps", "needs one exponent per coordinate");
                for (auto e : exps) mt.exps.push_back(int(e));
                mt.coef = m.at("coef").get<double>();
                pt.poly.push_back(std::move(mt));
            }
            spec.terms.push_back(std::move(pt));
        }
    }
    if (j.contains("builtins")) {
        const json& bs = j.at("builtins");
        const std::string bp = base + "/builtins";
        if (!bs.is_array()) throw SchemaError(bp, "expected an array");
        for (std::size_t k = 0; k < bs.size(); ++k) {
            const std::string p = bp + "/" + std::to_string(k);
            const json& b = bs[k];
            if (!b.is_object() || !b.contains("name") || !b.at("name").is_string())
                throw SchemaError(p, "builtin needs a string 'name'");
            BuiltinTerm bt;
            bt.name = b.at("name").get<std::string>();
            if (bt.name != "gaussian" && bt.name != "banana" && bt.name != "doublewell" && bt.name != "sextic" &&
                bt.name != "iso_tail")
                throw SchemaError(p + "/name", "unknown builtin '" + bt.name + "'");
            if (b.contains("coords")) bt.coords = parse_coords(b.at("coords"), p + "/coords");
            if (b.contains("params")) {
                const json& params = b.at("params");
                const std::string pp = p + "/params";
                if (!params.is_object()) throw SchemaError(pp, "expected an object");
                if (params.contains("Q")) bt.matrix = parse_matrix(params.at("Q"), pp + "/Q");
                if (params.contains("seed")) {
                    if (!params.at("seed").is_number_unsigned()) throw SchemaError(pp + "/seed", "expected a nonnegative integer");
                    bt.seed = params.at("seed").get<std::uint64_t>();
                }
                if (params.contains("sigma")) {
                    Eigen::MatrixXd s = parse_matrix(params.at("sigma"), pp + "/sigma");
                    if (s.rows() != 2) throw SchemaError(pp + "/sigma", "expected a 2x2 matrix");
                    bt.sigma = Eigen::Matrix2d(s);
                }
            }
            if (bt.name == "gaussian" && !bt.matrix && !bt.seed)
                throw SchemaError(p + "/params", "gaussian needs 'Q' or 'seed'");
            spec.builtins.push_back(std::move(bt));
        }
    }
    return spec;
}

} // namespace tthjb
