#ifndef VEMADAPT_VEM_HPP
#define VEMADAPT_VEM_HPP

#include "vemadapt/geometry.hpp"
#include "vemadapt/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vemadapt {

enum class Regime { PlaneStrain, PlaneStress };

const char* to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct MaterialParams {
    double E = 1.0;
    double nu = 0.3;
    double lambda = 0.0;
    double mu = 0.0;
    Regime regime = Regime::PlaneStrain;

    /// Fills lambda and mu from E and nu. Throws MaterialError outside
    /// E > 0, -1 < nu < 0.5.
    static MaterialParams make(double E, double nu, Regime regime = Regime::PlaneStrain);
};

/// Voigt (xx, yy, xy) with engineering shear strain.
Eigen::Matrix3d constitutive_matrix(const MaterialParams& m);

template <typename S>
using Mat3X = Eigen::Matrix<S, 3, Eigen::Dynamic>;
template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
struct ElementStiffnessT {
    MatX<S> K_c;
    MatX<S> K_s;
    Mat3X<S> B;
    MatX<S> Dmat;  ///< 2n_v x 6 linear-monomial dofs
    S area{};

    MatX<S> K() const { return K_c + K_s; }
};

using ElementStiffness = ElementStiffnessT<double>;

// Dofs are interleaved: (u_x, u_y) of vertex 0, then vertex 1, ...

/// Maps element dofs to the constant projected strain.
template <typename S>
Mat3X<S> projection_operator(std::span<const Vec2<S>> poly) {
    const std::size_t n = poly.size();
    const S area = geom::signed_area<S>(poly);
    if (n < 3 || !(area > S(0))) throw TopologyError("projection needs a CCW polygon with positive area");
    Mat3X<S> B = Mat3X<S>::Zero(3, static_cast<Eigen::Index>(2 * n));
    for (std::size_t a = 0; a < n; ++a) {
        const Vec2<S>& prev = poly[(a + n - 1) % n];
        const Vec2<S>& next = poly[(a + 1) % n];
        if ((next - poly[a]).norm() == S(0)) throw TopologyError("element has a zero-length edge");
        // Boundary integral of the vertex hat function times the outward normal.
        const S qx = S(0.5) * (next.y() - prev.y());
        const S qy = S(-0.5) * (next.x() - prev.x());
        const auto c = static_cast<Eigen::Index>(2 * a);
        B(0, c) = qx / area;
        B(1, c + 1) = qy / area;
        B(2, c) = qy / area;
        B(2, c + 1) = qx / area;
    }
    return B;
}

template <typename S>
ElementStiffnessT<S> element_matrices(std::span<const Vec2<S>> poly, const Eigen::Matrix<S, 3, 3>& D, S mu) {
    ElementStiffnessT<S> k;
    const std::size_t n = poly.size();
    const auto nd = static_cast<Eigen::Index>(2 * n);
    k.B = projection_operator<S>(poly);
    k.area = geom::signed_area<S>(poly);
    k.K_c = k.area * k.B.transpose() * D * k.B;

    const Vec2<S> xc = geom::centroid<S>(poly);
    const S h = geom::diameter<S>(poly);
    k.Dmat = MatX<S>::Zero(nd, 6);
    Eigen::Matrix<S, 3, 3> M = Eigen::Matrix<S, 3, 3>::Zero();
    for (std::size_t a = 0; a < n; ++a) {
        const Eigen::Matrix<S, 3, 1> m(S(1), (poly[a].x() - xc.x()) / h, (poly[a].y() - xc.y()) / h);
        const auto r = static_cast<Eigen::Index>(2 * a);
        k.Dmat.block(r, 0, 1, 3) = m.transpose();
        k.Dmat.block(r + 1, 3, 1, 3) = m.transpose();
        M += m * m.transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix<S, 3, 3>> svd(M);
    const auto sv = svd.singularValues();
    if (!(sv(2) > S(1e-12) * sv(0))) throw DegenerateElementError("element nodes are collinear");
    const Eigen::Matrix<S, 3, 3> Minv = M.inverse();
    MatX<S> G = MatX<S>::Zero(6, 6);
    G.block(0, 0, 3, 3) = Minv;
    G.block(3, 3, 3, 3) = Minv;
    k.K_s = mu * (MatX<S>::Identity(nd, nd) - k.Dmat * G * k.Dmat.transpose());
    return k;
}

Mat3X<double> projection_operator(const PolyMesh& mesh, Index elem);
ElementStiffness element_matrices(const PolyMesh& mesh, Index elem, const Eigen::Matrix3d& D, double mu);

struct Loads {
    /// Body force per unit area; empty means zero.
    std::function<Eigen::Vector2d(const Point2&)> body;
    /// When set, constrained dofs take this field's value instead of the
    /// segment's constant.
    std::function<Eigen::Vector2d(const Point2&)> dirichlet;
};

struct SolutionField {
    Eigen::VectorXd u;  ///< 2 dofs per node
    double relative_residual = 0.0;

    Eigen::Vector2d at(Index node) const { return u.segment<2>(2 * node); }
};

/// Prescribed value per dof, NaN where free. A dof is constrained when the
/// node touches any segment constraining that component.
std::vector<double> dirichlet_values(const PolyMesh& mesh, const Loads& loads = {});

/// Consistent nodal forces from body force and boundary tractions.
Eigen::VectorXd load_vector(const PolyMesh& mesh, const Loads& loads);

Eigen::SparseMatrix<double> assemble_stiffness(const PolyMesh& mesh, const MaterialParams& material);

SolutionField assemble_and_solve(const PolyMesh& mesh, const MaterialParams& material, const Loads& loads = {});

/// Variant with caller-supplied Dirichlet values (NaN = free).
SolutionField assemble_and_solve(const PolyMesh& mesh, const MaterialParams& material, const Loads& loads,
                                 const std::vector<double>& prescribed);

Voigt3 element_stress(const PolyMesh& mesh, Index elem, const SolutionField& u, const Eigen::Matrix3d& D);
std::vector<Voigt3> element_stresses(const PolyMesh& mesh, const SolutionField& u, const Eigen::Matrix3d& D);

/// u^T K u.
double strain_energy(const PolyMesh& mesh, const MaterialParams& material, const SolutionField& u);

}  // namespace vemadapt

#endif  // VEMADAPT_VEM_HPP
