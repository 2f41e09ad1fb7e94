#include "vemadapt/vem.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>

namespace vemadapt {

const char* to_string(Regime r) { return r == Regime::PlaneStrain ? "plane-strain" : "plane-stress"; }

Regime regime_from_string(const std::string& s) {
    if (s == "plane-strain" || s == "plane_strain") return Regime::PlaneStrain;
    if (s == "plane-stress" || s == "plane_stress") return Regime::PlaneStress;
    throw UsageError("unknown regime '" + s + "'");
}

MaterialParams MaterialParams::make(double E, double nu, Regime regime) {
    if (!(E > 0.0) || !std::isfinite(E)) throw MaterialError("Young's modulus must be positive");
    if (nu == 0.5) throw MaterialError("nu = 0.5 is incompressible; the displacement formulation locks");
    if (!(nu > -1.0 && nu < 0.5)) throw MaterialError("Poisson ratio must lie in (-1, 0.5)");
    MaterialParams m;
    m.E = E;
    m.nu = nu;
    m.regime = regime;
    m.mu = E / (2.0 * (1.0 + nu));
    m.lambda = regime == Regime::PlaneStrain ? E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)) : E * nu / (1.0 - nu * nu);
    return m;
}

Eigen::Matrix3d constitutive_matrix(const MaterialParams& m) {
    if (m.nu == 0.5) throw MaterialError("nu = 0.5 is incompressible; the displacement formulation locks");
    Eigen::Matrix3d D;
    D << m.lambda + 2.0 * m.mu, m.lambda, 0.0,
         m.lambda, m.lambda + 2.0 * m.mu, 0.0,
         0.0, 0.0, m.mu;
    return D;
}

Mat3X<double> projection_operator(const PolyMesh& mesh, Index elem) {
    const auto poly = mesh.polygon(elem);
    return projection_operator<double>(std::span<const Point2>(poly));
}

ElementStiffness element_matrices(const PolyMesh& mesh, Index elem, const Eigen::Matrix3d& D, double mu) {
    const auto poly = mesh.polygon(elem);
    return element_matrices<double>(std::span<const Point2>(poly), D, mu);
}

std::vector<double> dirichlet_values(const PolyMesh& mesh, const Loads& loads) {
    const auto info = boundary_node_info(mesh);
    std::vector<double> g(2 * mesh.nodes.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t v = 0; v < info.size(); ++v)
        for (int k : info[v].segments) {
            const auto& s = mesh.domain.segments[static_cast<std::size_t>(k)];
            for (int c = 0; c < 2; ++c)
                if (s.constrains(c) && std::isnan(g[2 * v + static_cast<std::size_t>(c)]))
                    g[2 * v + static_cast<std::size_t>(c)] = s.value[static_cast<std::size_t>(c)].value_or(0.0);
        }
    if (loads.dirichlet)
        for (std::size_t v = 0; v < info.size(); ++v) {
            if (std::isnan(g[2 * v]) && std::isnan(g[2 * v + 1])) continue;
            const Eigen::Vector2d w = loads.dirichlet(mesh.nodes[v]);
            for (std::size_t c = 0; c < 2; ++c)
                if (!std::isnan(g[2 * v + c])) g[2 * v + c] = w(static_cast<Eigen::Index>(c));
        }
    return g;
}

Eigen::VectorXd load_vector(const PolyMesh& mesh, const Loads& loads) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * mesh.num_nodes());
    if (loads.body) {
        for (Index e = 0; e < mesh.num_elements(); ++e) {
            const auto& cyc = mesh.elements[static_cast<std::size_t>(e)];
            const double w = element_area(mesh, e) / static_cast<double>(cyc.size());
            for (Index v : cyc) f.segment<2>(2 * v) += w * loads.body(mesh.nodes[static_cast<std::size_t>(v)]);
        }
    }
    const double tol = mesh.merge_tolerance();
    for (const auto& s : mesh.domain.segments) {
        if (!s.has_traction()) continue;
        for (const auto& cyc : mesh.elements) {
            const std::size_t n = cyc.size();
            for (std::size_t k = 0; k < n; ++k) {
                const Index ia = cyc[k];
                const Index ib = cyc[(k + 1) % n];
                const Point2& p = mesh.nodes[static_cast<std::size_t>(ia)];
                const Point2& q = mesh.nodes[static_cast<std::size_t>(ib)];
                const Point2 d = q - p;
                const double len = d.norm();
                if (len <= tol) continue;
                // Both edge ends must sit on the segment's supporting line.
                const Point2 t = (s.b - s.a).normalized();
                if (std::abs(geom::cross<double>(t, p - s.a)) > tol || std::abs(geom::cross<double>(t, q - s.a)) > tol) continue;
                double t0 = geom::project_param<double>(s.a, p, q);
                double t1 = geom::project_param<double>(s.b, p, q);
                if (t0 > t1) std::swap(t0, t1);
                t0 = std::max(t0, 0.0);
                t1 = std::min(t1, 1.0);
                if (t1 - t0 <= tol / len) continue;
                const double wq = 0.5 * (t1 * t1 - t0 * t0);
                const double wp = (t1 - t0) - wq;
                f.segment<2>(2 * ia) += len * wp * s.traction;
                f.segment<2>(2 * ib) += len * wq * s.traction;
            }
        }
    }
    return f;
}

namespace {

template <typename F>
void for_each_element_matrix(const PolyMesh& mesh, const MaterialParams& material, F&& f) {
    const Eigen::Matrix3d D = constitutive_matrix(material);
    for (Index e = 0; e < mesh.num_elements(); ++e) {
        const auto poly = mesh.polygon(e);
        const auto k = element_matrices<double>(std::span<const Point2>(poly), D, material.mu);
        f(e, k.K_c + k.K_s);
    }
}

std::string describe_free_modes(const PolyMesh& mesh, const std::vector<char>& constrained) {
    Point2 c = Point2::Zero();
    for (const auto& p : mesh.nodes) c += p;
    c /= static_cast<double>(mesh.nodes.size());
    const double h = std::max(mesh.domain.outline.empty() ? 1.0 : mesh.domain.diameter(), 1e-300);
    std::vector<Eigen::RowVector3d> rows;
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
        const Point2 r = (mesh.nodes[v] - c) / h;
        if (constrained[2 * v]) rows.emplace_back(1.0, 0.0, -r.y());
        if (constrained[2 * v + 1]) rows.emplace_back(0.0, 1.0, r.x());
    }
    Eigen::MatrixXd R(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) R.row(static_cast<Eigen::Index>(i)) = rows[i];
    if (rows.empty()) return "x-translation, y-translation, rotation";
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    std::string out;
    static const char* names[3] = {"x-translation", "y-translation", "rotation"};
    for (int k = 0; k < 3; ++k) {
        const bool null = k >= sv.size() || sv(k) <= 1e-10 * std::max(1.0, sv(0));
        if (!null) continue;
        const Eigen::Vector3d v = svd.matrixV().col(k);
        Eigen::Index arg;
        const double big = v.cwiseAbs().maxCoeff(&arg);
        if (!out.empty()) out += ", ";
        out += big > 0.99 ? names[arg] : "combined translation/rotation";
    }
    return out;
}

}  // namespace

Eigen::SparseMatrix<double> assemble_stiffness(const PolyMesh& mesh, const MaterialParams& material) {
    const Index nd = 2 * mesh.num_nodes();
    std::vector<Eigen::Triplet<double>> trip;
    for_each_element_matrix(mesh, material, [&](Index e, const Eigen::MatrixXd& K) {
        const auto& cyc = mesh.elements[static_cast<std::size_t>(e)];
        const auto n = static_cast<Eigen::Index>(cyc.size());
        for (Eigen::Index a = 0; a < 2 * n; ++a)
            for (Eigen::Index b = 0; b < 2 * n; ++b)
                trip.emplace_back(2 * cyc[static_cast<std::size_t>(a / 2)] + a % 2, 2 * cyc[static_cast<std::size_t>(b / 2)] + b % 2,
                                  K(a, b));
    });
    Eigen::SparseMatrix<double> K(nd, nd);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

SolutionField assemble_and_solve(const PolyMesh& mesh, const MaterialParams& material, const Loads& loads) {
    return assemble_and_solve(mesh, material, loads, dirichlet_values(mesh, loads));
}

SolutionField assemble_and_solve(const PolyMesh& mesh, const MaterialParams& material, const Loads& loads,
                                 const std::vector<double>& prescribed) {
    const Index nd = 2 * mesh.num_nodes();
    if (static_cast<Index>(prescribed.size()) != nd) throw PreconditionError("prescribed vector has the wrong size");
    std::vector<char> constrained(static_cast<std::size_t>(nd));
    std::vector<Index> free_id(static_cast<std::size_t>(nd), -1);
    Index nf = 0;
    for (Index i = 0; i < nd; ++i) {
        constrained[static_cast<std::size_t>(i)] = !std::isnan(prescribed[static_cast<std::size_t>(i)]);
        if (!constrained[static_cast<std::size_t>(i)]) free_id[static_cast<std::size_t>(i)] = nf++;
    }
    const std::string free_modes = describe_free_modes(mesh, constrained);
    if (!free_modes.empty()) throw ConstraintError("stiffness is singular: free rigid mode(s): " + free_modes);

    SolutionField sol;
    sol.u = Eigen::VectorXd::Zero(nd);
    for (Index i = 0; i < nd; ++i)
        if (constrained[static_cast<std::size_t>(i)]) sol.u(i) = prescribed[static_cast<std::size_t>(i)];

    const Eigen::VectorXd f = load_vector(mesh, loads);
    Eigen::VectorXd rhs(nf);
    for (Index i = 0; i < nd; ++i)
        if (free_id[static_cast<std::size_t>(i)] >= 0) rhs(free_id[static_cast<std::size_t>(i)]) = f(i);

    std::vector<Eigen::Triplet<double>> trip;
    for_each_element_matrix(mesh, material, [&](Index e, const Eigen::MatrixXd& K) {
        const auto& cyc = mesh.elements[static_cast<std::size_t>(e)];
        const auto n = static_cast<Eigen::Index>(cyc.size());
        for (Eigen::Index a = 0; a < 2 * n; ++a) {
            const Index ga = 2 * cyc[static_cast<std::size_t>(a / 2)] + a % 2;
            const Index fa = free_id[static_cast<std::size_t>(ga)];
            if (fa < 0) continue;
            for (Eigen::Index b = 0; b < 2 * n; ++b) {
                const Index gb = 2 * cyc[static_cast<std::size_t>(b / 2)] + b % 2;
                const Index fb = free_id[static_cast<std::size_t>(gb)];
                if (fb >= 0) trip.emplace_back(fa, fb, K(a, b));
                else rhs(fa) -= K(a, b) * sol.u(gb);
            }
        }
    });
    if (nf == 0) return sol;

    Eigen::SparseMatrix<double> Kff(nf, nf);
    Kff.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Kff);
    if (ldlt.info() != Eigen::Success) throw NumericError("sparse factorization failed");
    if ((ldlt.vectorD().array() <= 0.0).any())
        throw ConstraintError("reduced stiffness is not positive definite (free mechanism)");

    const double bnorm = rhs.norm();
    Eigen::VectorXd x = ldlt.solve(rhs);
    double rel = 0.0;
    if (bnorm > 0.0) {
        for (int it = 0; it < 5; ++it) {
            const Eigen::VectorXd r = rhs - Kff * x;
            rel = r.norm() / bnorm;
            if (rel <= 1e-14) break;
            x += ldlt.solve(r);
        }
        rel = (rhs - Kff * x).norm() / bnorm;
        if (!(rel <= 1e-12)) throw NumericError("linear solve reached relative residual " + std::to_string(rel) + " > 1e-12");
    } else {
        x.setZero();
    }
    if (!x.allFinite()) throw NumericError("solution is not finite");
    for (Index i = 0; i < nd; ++i)
        if (free_id[static_cast<std::size_t>(i)] >= 0) sol.u(i) = x(free_id[static_cast<std::size_t>(i)]);
    sol.relative_residual = rel;
    return sol;
}

Voigt3 element_stress(const PolyMesh& mesh, Index elem, const SolutionField& u, const Eigen::Matrix3d& D) {
    const auto& cyc = mesh.elements[static_cast<std::size_t>(elem)];
    const auto B = projection_operator(mesh, elem);
    Eigen::VectorXd d(static_cast<Eigen::Index>(2 * cyc.size()));
    for (std::size_t a = 0; a < cyc.size(); ++a) d.segment<2>(static_cast<Eigen::Index>(2 * a)) = u.at(cyc[a]);
    return D * (B * d);
}

std::vector<Voigt3> element_stresses(const PolyMesh& mesh, const SolutionField& u, const Eigen::Matrix3d& D) {
    std::vector<Voigt3> s(mesh.elements.size());
    for (Index e = 0; e < mesh.num_elements(); ++e) s[static_cast<std::size_t>(e)] = element_stress(mesh, e, u, D);
    return s;
}

double strain_energy(const PolyMesh& mesh, const MaterialParams& material, const SolutionField& u) {
    double w = 0.0;
    for_each_element_matrix(mesh, material, [&](Index e, const Eigen::MatrixXd& K) {
        const auto& cyc = mesh.elements[static_cast<std::size_t>(e)];
        Eigen::VectorXd d(static_cast<Eigen::Index>(2 * cyc.size()));
        for (std::size_t a = 0; a < cyc.size(); ++a) d.segment<2>(static_cast<Eigen::Index>(2 * a)) = u.at(cyc[a]);
        w += d.dot(K * d);
    });
    return w;
}

}  // namespace vemadapt
