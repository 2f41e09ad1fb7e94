#include "vemadapt/error_estimation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace vemadapt {

namespace {

constexpr double kMaxFitCondition = 1e3;

std::vector<Index> enlarge(const PolyMesh& mesh, const NodeIncidence& inc, const std::vector<Index>& patch) {
    std::vector<Index> out = patch;
    for (Index e : patch)
        for (Index v : mesh.elements[static_cast<std::size_t>(e)])
            for (Index f : inc.of(v)) out.push_back(f);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool fit_at_node(const Point2& x0, const std::vector<Index>& patch, const std::vector<Point2>& centroids,
                 const std::vector<Voigt3>& stresses, Voigt3& out) {
    if (patch.size() < 3) return false;
    double h = 0.0;
    for (Index e : patch) h = std::max(h, (centroids[static_cast<std::size_t>(e)] - x0).norm());
    if (!(h > 0.0)) return false;
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d b = Eigen::Matrix3d::Zero();  // one column per stress component
    for (Index e : patch) {
        const Point2 r = (centroids[static_cast<std::size_t>(e)] - x0) / h;
        const Eigen::Vector3d p(1.0, r.x(), r.y());
        A += p * p.transpose();
        b += p * stresses[static_cast<std::size_t>(e)].transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(A, Eigen::EigenvaluesOnly);
    const auto ev = eig.eigenvalues();
    if (!(ev(0) > 0.0) || ev(2) / ev(0) > kMaxFitCondition) return false;
    const Eigen::Matrix3d a = A.ldlt().solve(b);
    // The fit is centred on the node, so its value there is the constant term.
    out = a.row(0).transpose();
    return out.allFinite();
}

double quadrature(const Eigen::Matrix3d& Dinv, double area, const std::vector<Index>& nodes, const RecoveredStress& star,
                  const Voigt3& ref, bool error) {
    double s = 0.0;
    for (Index v : nodes) {
        const Voigt3 d = error ? Voigt3(star.nodal[static_cast<std::size_t>(v)] - ref) : star.nodal[static_cast<std::size_t>(v)];
        s += d.dot(Dinv * d);
    }
    return area / static_cast<double>(nodes.size()) * s;
}

}  // namespace

RecoveredStress recover_stress(const PolyMesh& mesh, const std::vector<Voigt3>& element_stresses) {
    return recover_stress(mesh, NodeIncidence(mesh), element_stresses);
}

RecoveredStress recover_stress(const PolyMesh& mesh, const NodeIncidence& inc, const std::vector<Voigt3>& element_stresses) {
    std::vector<Point2> centroids(mesh.elements.size());
    std::vector<double> areas(mesh.elements.size());
    for (Index e = 0; e < mesh.num_elements(); ++e) {
        centroids[static_cast<std::size_t>(e)] = element_centroid(mesh, e);
        areas[static_cast<std::size_t>(e)] = element_area(mesh, e);
    }
    RecoveredStress rs;
    rs.nodal.resize(mesh.nodes.size(), Voigt3::Zero());
    for (Index v = 0; v < mesh.num_nodes(); ++v) {
        const auto& base = inc.of(v);
        if (base.empty()) throw EstimationError("node " + std::to_string(v) + " belongs to no element");
        const Point2& x0 = mesh.nodes[static_cast<std::size_t>(v)];
        std::vector<Index> patch = base;
        bool done = fit_at_node(x0, patch, centroids, element_stresses, rs.nodal[static_cast<std::size_t>(v)]);
        for (int level = 0; level < 2 && !done; ++level) {
            patch = enlarge(mesh, inc, patch);
            done = fit_at_node(x0, patch, centroids, element_stresses, rs.nodal[static_cast<std::size_t>(v)]);
        }
        if (!done) {
            Voigt3 acc = Voigt3::Zero();
            double w = 0.0;
            for (Index e : base) {
                acc += areas[static_cast<std::size_t>(e)] * element_stresses[static_cast<std::size_t>(e)];
                w += areas[static_cast<std::size_t>(e)];
            }
            rs.nodal[static_cast<std::size_t>(v)] = acc / w;
        }
        if (!rs.nodal[static_cast<std::size_t>(v)].allFinite())
            throw EstimationError("stress recovery at node " + std::to_string(v) + " is not finite");
    }
    return rs;
}

ElementError element_error(const PolyMesh& mesh, Index elem, const RecoveredStress& sigma_star, const Voigt3& sigma_h,
                           const Eigen::Matrix3d& D) {
    const Eigen::Matrix3d Dinv = D.inverse();
    const auto& cyc = mesh.elements[static_cast<std::size_t>(elem)];
    const double area = element_area(mesh, elem);
    ElementError out;
    out.e = quadrature(Dinv, area, cyc, sigma_star, sigma_h, true);
    out.U = quadrature(Dinv, area, cyc, sigma_star, sigma_h, false);
    out.norm = std::sqrt(out.e / 2.0);
    return out;
}

GlobalError global_error(std::span<const ElementError> elems) {
    double se = 0.0;
    double su = 0.0;
    for (const auto& x : elems) {
        se += x.e;
        su += x.U;
    }
    GlobalError g;
    g.energy_error = std::sqrt(se / 2.0);
    g.energy = std::sqrt(su / 2.0);
    if (!(g.energy > 0.0)) throw EstimationError("elastic energy is zero; relative error undefined");
    g.rel_error = g.energy_error / g.energy;
    return g;
}

double predict_patch_error(const PolyMesh& mesh, Index node, const RecoveredStress& sigma_star,
                           const std::vector<Voigt3>& element_stresses, const Eigen::Matrix3d& D) {
    return predict_patch_error(mesh, node_patch(mesh, node), sigma_star, element_stresses, D);
}

double predict_patch_error(const PolyMesh& mesh, const std::vector<Index>& patch, const RecoveredStress& sigma_star,
                           const std::vector<Voigt3>& element_stresses, const Eigen::Matrix3d& D) {
    if (patch.empty()) return 0.0;
    Voigt3 mean = Voigt3::Zero();
    double area = 0.0;
    std::vector<Index> nodes;
    for (Index e : patch) {
        const double a = element_area(mesh, e);
        mean += a * element_stresses[static_cast<std::size_t>(e)];
        area += a;
        const auto& cyc = mesh.elements[static_cast<std::size_t>(e)];
        nodes.insert(nodes.end(), cyc.begin(), cyc.end());
    }
    mean /= area;
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    const double ep = quadrature(D.inverse(), area, nodes, sigma_star, mean, true);
    return std::sqrt(ep / 2.0);
}

std::vector<double> ErrorReport::element_norms() const {
    std::vector<double> out;
    out.reserve(elements.size());
    for (const auto& e : elements) out.push_back(e.norm);
    return out;
}

ErrorReport estimate_error(const PolyMesh& mesh, const std::vector<Voigt3>& element_stresses, const Eigen::Matrix3d& D) {
    const NodeIncidence inc(mesh);
    ErrorReport r;
    r.recovered = recover_stress(mesh, inc, element_stresses);
    r.elements.resize(mesh.elements.size());
    for (Index e = 0; e < mesh.num_elements(); ++e)
        r.elements[static_cast<std::size_t>(e)] = element_error(mesh, e, r.recovered, element_stresses[static_cast<std::size_t>(e)], D);
    r.global = global_error(r.elements);
    r.patch_prediction.resize(mesh.nodes.size());
    for (Index v = 0; v < mesh.num_nodes(); ++v)
        r.patch_prediction[static_cast<std::size_t>(v)] =
            predict_patch_error(mesh, inc.of(v), r.recovered, element_stresses, D);
    return r;
}

}  // namespace vemadapt
