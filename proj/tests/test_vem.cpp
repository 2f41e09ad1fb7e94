#include "support.hpp"

#include "vemadapt/vem.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace vemadapt;
using namespace vemadapt::test;

namespace {

const MaterialParams kMat = MaterialParams::make(1.0, 0.3);

Eigen::VectorXd nodal_dofs(const std::vector<Point2>& poly, const std::function<Eigen::Vector2d(const Point2&)>& f) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(2 * poly.size()));
    for (std::size_t a = 0; a < poly.size(); ++a) d.segment<2>(static_cast<Eigen::Index>(2 * a)) = f(poly[a]);
    return d;
}

SolutionField field_on(const PolyMesh& m, const std::function<Eigen::Vector2d(const Point2&)>& f) {
    SolutionField u;
    u.u = nodal_dofs(m.nodes, f);
    return u;
}

// (1/|E|) * integral over the boundary of sym(u_h (x) n), u_h the linear edge
// interpolant of the nodal values, by 3-point Gauss on every edge.
Voigt3 projection_by_quadrature(const std::vector<Point2>& poly, const Eigen::VectorXd& d) {
    static const double gp[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double area = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t a = 0; a < n; ++a) area += 0.5 * (poly[a].x() * poly[(a + 1) % n].y() - poly[(a + 1) % n].x() * poly[a].y());
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t b = (a + 1) % n;
        const Point2 t = poly[b] - poly[a];
        const double len = t.norm();
        const Eigen::Vector2d normal(t.y() / len, -t.x() / len);
        for (int q = 0; q < 3; ++q) {
            const double s = 0.5 * (gp[q] + 1.0);
            const Eigen::Vector2d u = (1 - s) * d.segment<2>(static_cast<Eigen::Index>(2 * a)) +
                                      s * d.segment<2>(static_cast<Eigen::Index>(2 * b));
            g += 0.5 * gw[q] * len * u * normal.transpose();
        }
    }
    g /= area;
    return {g(0, 0), g(1, 1), g(0, 1) + g(1, 0)};
}

// Textbook constant-strain triangle stiffness.
Eigen::Matrix<double, 6, 6> cst_stiffness(const Point2& p1, const Point2& p2, const Point2& p3, const Eigen::Matrix3d& D) {
    const double x1 = p1.x(), y1 = p1.y(), x2 = p2.x(), y2 = p2.y(), x3 = p3.x(), y3 = p3.y();
    const double A = 0.5 * ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1));
    Eigen::Matrix<double, 3, 6> B;
    B << y2 - y3, 0, y3 - y1, 0, y1 - y2, 0,
         0, x3 - x2, 0, x1 - x3, 0, x2 - x1,
         x3 - x2, y2 - y3, x1 - x3, y3 - y1, x2 - x1, y1 - y2;
    B /= 2 * A;
    return A * B.transpose() * D * B;
}

std::vector<Point2> regular_polygon(int n, double r, const Point2& c, double phase) {
    std::vector<Point2> p;
    for (int k = 0; k < n; ++k) {
        const double t = phase + 2 * M_PI * k / n;
        p.push_back(c + r * Point2(std::cos(t), std::sin(t)));
    }
    return p;
}

int count_zero_eigenvalues(const Eigen::MatrixXd& K, double rel_tol) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    const auto& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    int zeros = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        CHECK(ev(i) > -rel_tol * scale);
        if (std::abs(ev(i)) <= rel_tol * scale) ++zeros;
    }
    return zeros;
}

}  // namespace

TEST_CASE("lame parameters") {
    CHECK(kMat.mu == doctest::Approx(0.38461538461538464).epsilon(1e-15));
    CHECK(kMat.lambda == doctest::Approx(0.57692307692307698).epsilon(1e-15));
    const MaterialParams ps = MaterialParams::make(1.0, 0.3, Regime::PlaneStress);
    CHECK(ps.lambda == doctest::Approx(0.3 / (1 - 0.09)).epsilon(1e-15));
    CHECK(ps.mu == doctest::Approx(kMat.mu).epsilon(1e-15));
}

TEST_CASE("plane strain constitutive matrix") {
    const Eigen::Matrix3d D = constitutive_matrix(kMat);
    const double l = kMat.lambda, m = kMat.mu;
    Eigen::Matrix3d expected;
    expected << l + 2 * m, l, 0, l, l + 2 * m, 0, 0, 0, m;
    CHECK((D - expected).cwiseAbs().maxCoeff() < 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(D);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("zero poisson ratio decouples the normal components") {
    const MaterialParams m0 = MaterialParams::make(2.0, 0.0);
    const Eigen::Matrix3d D = constitutive_matrix(m0);
    CHECK(m0.lambda == 0.0);
    Eigen::Matrix3d expected = Eigen::Vector3d(2 * m0.mu, 2 * m0.mu, m0.mu).asDiagonal();
    CHECK((D - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("invalid materials") {
    CHECK_THROWS_AS((void)MaterialParams::make(1.0, 0.5), MaterialError);
    CHECK_THROWS_AS((void)MaterialParams::make(1.0, 0.6), MaterialError);
    CHECK_THROWS_AS((void)MaterialParams::make(1.0, -1.0), MaterialError);
    CHECK_THROWS_AS((void)MaterialParams::make(0.0, 0.3), MaterialError);
    CHECK_THROWS_AS((void)regime_from_string("plane-whatever"), UsageError);
    CHECK(regime_from_string("plane-stress") == Regime::PlaneStress);
}

TEST_CASE("projection of a linear field on the unit square") {
    const PolyMesh m = single_square();
    const auto B = projection_operator(m, 0);
    const Voigt3 eps = B * nodal_dofs(m.polygon(0), [](const Point2& p) { return Eigen::Vector2d(p.x(), 0); });
    CHECK((eps - Voigt3(1, 0, 0)).norm() < 1e-15);
}

TEST_CASE("rigid rotation has zero projected strain") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int n = 3; n <= 9; ++n) {
        std::vector<Point2> poly = regular_polygon(n, 1.0 + 0.3 * u(rng), {u(rng), u(rng)}, u(rng));
        const auto B = projection_operator<double>(poly);
        const Voigt3 eps = B * nodal_dofs(poly, [](const Point2& p) { return Eigen::Vector2d(-p.y(), p.x()); });
        CHECK(eps.norm() < 1e-13);
    }
}

TEST_CASE("projection with a hanging node matches boundary quadrature") {
    const std::vector<Point2> pentagon{{0, 0}, {0.5, 0}, {1, 0}, {1, 1}, {0, 1}};
    const auto B = projection_operator<double>(pentagon);
    const Eigen::VectorXd d_lin = nodal_dofs(pentagon, [](const Point2& p) { return Eigen::Vector2d(p.x(), 0); });
    CHECK((B * d_lin - Voigt3(1, 0, 0)).norm() < 1e-15);
    CHECK((projection_by_quadrature(pentagon, d_lin) - Voigt3(1, 0, 0)).norm() < 1e-14);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd d(10);
        for (Eigen::Index i = 0; i < 10; ++i) d(i) = g(rng);
        CHECK((B * d - projection_by_quadrature(pentagon, d)).norm() < 1e-13);
    }
}

TEST_CASE("zero-length edge is a topology error") {
    const std::vector<Point2> poly{{0, 0}, {1, 0}, {1, 0}, {0, 1}};
    CHECK_THROWS_AS((void)projection_operator<double>(poly), TopologyError);
}

TEST_CASE("consistency matrix of the unit triangle equals the CST stiffness") {
    const std::vector<Point2> tri{{0, 0}, {1, 0}, {0, 1}};
    const Eigen::Matrix3d D = constitutive_matrix(kMat);
    const auto k = element_matrices<double>(tri, D, kMat.mu);
    CHECK((k.K_c - cst_stiffness(tri[0], tri[1], tri[2], D)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("consistency matrix equals CST stiffness on random triangles") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-2, 2);
    const Eigen::Matrix3d D = constitutive_matrix(kMat);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Point2> tri{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
        const double A = 0.5 * ((tri[1] - tri[0]).x() * (tri[2] - tri[0]).y() - (tri[2] - tri[0]).x() * (tri[1] - tri[0]).y());
        if (std::abs(A) < 0.05) continue;
        if (A < 0) std::swap(tri[1], tri[2]);
        const auto k = element_matrices<double>(tri, D, kMat.mu);
        CHECK((k.K_c - cst_stiffness(tri[0], tri[1], tri[2], D)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("stabilization annihilates linear fields") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    const Eigen::Matrix3d D = constitutive_matrix(kMat);
    for (int n = 3; n <= 8; ++n) {
        const auto poly = regular_polygon(n, 0.7, {0.2, -0.1}, 0.3);
        const auto k = element_matrices<double>(poly, D, kMat.mu);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::Matrix<double, 6, 1> s;
            for (int i = 0; i < 6; ++i) s(i) = g(rng);
            CHECK((k.K_s * (k.Dmat * s)).norm() < 1e-13);
        }
    }
}

TEST_CASE("unit square stiffness has exactly three rigid modes") {
    const auto k = element_matrices(single_square(), 0, constitutive_matrix(kMat), kMat.mu);
    const Eigen::MatrixXd K = k.K();
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(count_zero_eigenvalues(K, 1e-12) == 3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ec(k.K_c);
    int rank = 0;
    for (Eigen::Index i = 0; i < ec.eigenvalues().size(); ++i)
        if (ec.eigenvalues()(i) > 1e-12 * ec.eigenvalues().maxCoeff()) ++rank;
    CHECK(rank <= 3);
}

TEST_CASE("element matrices on adapted-style meshes are symmetric PSD with three zero modes") {
    const PolyMesh m = generate_mesh(build_l_domain().domain, 60, MeshType::Voronoi, 8);
    const Eigen::Matrix3d D = constitutive_matrix(kMat);
    for (Index e = 0; e < m.num_elements(); ++e) {
        const auto k = element_matrices(m, e, D, kMat.mu);
        CHECK((k.K_c - k.K_c.transpose()).cwiseAbs().maxCoeff() < 1e-13);
        CHECK((k.K_s - k.K_s.transpose()).cwiseAbs().maxCoeff() < 1e-13);
        CHECK(count_zero_eigenvalues(k.K(), 1e-10) == 3);
    }
}

TEST_CASE("collinear element is degenerate") {
    const std::vector<Point2> poly{{0, 0}, {1, 0}, {2, 1e-14}};
    CHECK_THROWS((void)element_matrices<double>(poly, constitutive_matrix(kMat), kMat.mu));
}

TEST_CASE("patch test on a 2x2 structured mesh") {
    const Benchmark b = build_patch_test();
    const PolyMesh m = generate_mesh(b.domain, 4, MeshType::Structured, 0);
    const SolutionField u = assemble_and_solve(m, kMat, b.loads);
    const Index centre = find_node(m, {0.5, 0.5});
    REQUIRE(centre >= 0);
    CHECK((u.at(centre) - patch_test_field({0.5, 0.5})).norm() <= 1e-12);
    CHECK(u.relative_residual <= 1e-12);
}

TEST_CASE("patch test on a 50-element voronoi mesh") {
    const Benchmark b = build_patch_test();
    const PolyMesh m = generate_mesh(b.domain, 50, MeshType::Voronoi, 13);
    const SolutionField u = assemble_and_solve(m, kMat, b.loads);
    for (Index v = 0; v < m.num_nodes(); ++v)
        CHECK((u.at(v) - patch_test_field(m.nodes[static_cast<std::size_t>(v)])).norm() <= 1e-12);
    const auto sig = element_stresses(m, u, constitutive_matrix(kMat));
    for (const auto& s : sig) CHECK((s - sig.front()).norm() <= 1e-12);
}

TEST_CASE("uniaxial stretch gives the closed-form constant stress") {
    const Benchmark b = build_uniaxial();
    const double l = kMat.lambda, mu = kMat.mu, eyy = kUniaxialStretch;
    const double exx = -l / (l + 2 * mu) * eyy;
    const Voigt3 exact(0.0, l * exx + (l + 2 * mu) * eyy, 0.0);
    for (MeshType t : {MeshType::Structured, MeshType::Voronoi}) {
        const PolyMesh m = generate_mesh(b.domain, 36, t, 4);
        const SolutionField u = assemble_and_solve(m, kMat, b.loads);
        for (const auto& s : element_stresses(m, u, constitutive_matrix(kMat))) CHECK((s - exact).norm() <= 1e-10);
    }
}

TEST_CASE("neumann traction gives the applied stress") {
    const DomainSpec d = DomainSpec::from_segments({
        segment({0, 0}, {1, 0}, BoundaryTag::DirichletY, {}, 0.0),
        segment({1, 0}, {1, 1}, BoundaryTag::Free),
        [] {
            auto s = segment({1, 1}, {0, 1}, BoundaryTag::Neumann);
            s.traction = Eigen::Vector2d(0.0, 2.5);
            return s;
        }(),
        segment({0, 1}, {0, 0}, BoundaryTag::DirichletX, 0.0),
    });
    const PolyMesh m = generate_mesh(d, 30, MeshType::Voronoi, 2);
    const SolutionField u = assemble_and_solve(m, kMat, {});
    for (const auto& s : element_stresses(m, u, constitutive_matrix(kMat))) CHECK((s - Voigt3(0, 2.5, 0)).norm() <= 1e-10);
}

TEST_CASE("load vector totals equal the applied resultants") {
    Loads loads;
    loads.body = [](const Point2&) { return Eigen::Vector2d(1.0, -3.0); };
    const Benchmark p = build_punch(1);
    const PolyMesh m = generate_mesh(p.domain, 50, MeshType::Voronoi, 6);
    const Eigen::VectorXd f = load_vector(m, loads);
    double fx = 0, fy = 0;
    for (Index v = 0; v < m.num_nodes(); ++v) {
        fx += f(2 * v);
        fy += f(2 * v + 1);
    }
    CHECK(fx == doctest::Approx(4.0 * 1.0));
    CHECK(fy == doctest::Approx(4.0 * -3.0 - 0.3 * kPunchLoad));
}

TEST_CASE("dirichlet values are satisfied exactly") {
    const Benchmark b = build_l_domain();
    const PolyMesh m = generate_mesh(b.domain, 80, MeshType::Voronoi, 1);
    const SolutionField u = assemble_and_solve(m, kMat, b.loads);
    const auto pres = dirichlet_values(m, b.loads);
    int constrained = 0;
    for (std::size_t i = 0; i < pres.size(); ++i) {
        if (std::isnan(pres[i])) continue;
        ++constrained;
        CHECK(u.u(static_cast<Eigen::Index>(i)) == pres[i]);
    }
    CHECK(constrained > 0);
    const Index corner = find_node(m, {0, 0});
    REQUIRE(corner >= 0);
    CHECK(u.at(corner).norm() == 0.0);
}

TEST_CASE("global stiffness is symmetric and energy is additive over elements") {
    const Benchmark b = build_l_domain();
    const PolyMesh m = generate_mesh(b.domain, 60, MeshType::Voronoi, 21);
    const Eigen::SparseMatrix<double> K = assemble_stiffness(m, kMat);
    const Eigen::MatrixXd Kd(K);
    CHECK((Kd - Kd.transpose()).cwiseAbs().maxCoeff() < 1e-13);
    const SolutionField u = assemble_and_solve(m, kMat, b.loads);
    const Eigen::Matrix3d D = constitutive_matrix(kMat);
    double sum = 0.0;
    for (Index e = 0; e < m.num_elements(); ++e) {
        const auto& cyc = m.elements[static_cast<std::size_t>(e)];
        Eigen::VectorXd d(static_cast<Eigen::Index>(2 * cyc.size()));
        for (std::size_t a = 0; a < cyc.size(); ++a) d.segment<2>(static_cast<Eigen::Index>(2 * a)) = u.at(cyc[a]);
        sum += d.dot(element_matrices(m, e, D, kMat.mu).K() * d);
    }
    CHECK(strain_energy(m, kMat, u) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("unconstrained direction is a constraint error") {
    const DomainSpec d = DomainSpec::from_segments({
        segment({0, 0}, {1, 0}, BoundaryTag::DirichletY, {}, 0.0),
        segment({1, 0}, {1, 1}, BoundaryTag::Free),
        segment({1, 1}, {0, 1}, BoundaryTag::DirichletY, {}, 0.1),
        segment({0, 1}, {0, 0}, BoundaryTag::Free),
    });
    const PolyMesh m = generate_mesh(d, 9, MeshType::Structured, 0);
    CHECK_THROWS_AS((void)assemble_and_solve(m, kMat, {}), ConstraintError);
}

TEST_CASE("element stress of simple fields") {
    const PolyMesh m = generate_mesh(unit_square(), 20, MeshType::Voronoi, 3);
    const Eigen::Matrix3d D = constitutive_matrix(kMat);
    const SolutionField t = field_on(m, [](const Point2&) { return Eigen::Vector2d(0.4, -1.2); });
    const SolutionField x = field_on(m, [](const Point2& p) { return Eigen::Vector2d(p.x(), 0.0); });
    const Voigt3 row(kMat.lambda + 2 * kMat.mu, kMat.lambda, 0.0);
    for (Index e = 0; e < m.num_elements(); ++e) {
        CHECK(element_stress(m, e, t, D).norm() < 1e-14);
        CHECK((element_stress(m, e, x, D) - row).norm() < 1e-14);
    }
}
