#ifndef VEMADAPT_ERROR_ESTIMATION_HPP
#define VEMADAPT_ERROR_ESTIMATION_HPP

#include "vemadapt/mesh.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace vemadapt {

struct RecoveredStress {
    std::vector<Voigt3> nodal;
};

/// Nodal stresses from a least-squares linear fit of element stresses
/// sampled at element centroids over each node's patch. Patches with fewer
/// than three sampling points, or collinear ones, are enlarged by the
/// elements sharing a node with them.
RecoveredStress recover_stress(const PolyMesh& mesh, const std::vector<Voigt3>& element_stresses);
RecoveredStress recover_stress(const PolyMesh& mesh, const NodeIncidence& inc, const std::vector<Voigt3>& element_stresses);

struct ElementError {
    double e = 0.0;     ///< energy-density integral of the stress error
    double U = 0.0;     ///< same with the recovered stress alone
    double norm = 0.0;  ///< sqrt(e / 2)
};

ElementError element_error(const PolyMesh& mesh, Index elem, const RecoveredStress& sigma_star, const Voigt3& sigma_h,
                           const Eigen::Matrix3d& D);

struct GlobalError {
    double energy_error = 0.0;  ///< sqrt(sum e_i / 2)
    double energy = 0.0;        ///< sqrt(sum U_i / 2)
    double rel_error = 0.0;
};

/// Throws EstimationError when the energy vanishes.
GlobalError global_error(std::span<const ElementError> elems);

/// Error a single element replacing the node's patch would carry, using the
/// area-weighted patch stress.
double predict_patch_error(const PolyMesh& mesh, Index node, const RecoveredStress& sigma_star,
                           const std::vector<Voigt3>& element_stresses, const Eigen::Matrix3d& D);
double predict_patch_error(const PolyMesh& mesh, const std::vector<Index>& patch, const RecoveredStress& sigma_star,
                           const std::vector<Voigt3>& element_stresses, const Eigen::Matrix3d& D);

struct ErrorReport {
    std::vector<ElementError> elements;
    std::vector<double> patch_prediction;  ///< per node
    GlobalError global;
    RecoveredStress recovered;

    std::vector<double> element_norms() const;
};

ErrorReport estimate_error(const PolyMesh& mesh, const std::vector<Voigt3>& element_stresses, const Eigen::Matrix3d& D);

}  // namespace vemadapt

#endif  // VEMADAPT_ERROR_ESTIMATION_HPP
