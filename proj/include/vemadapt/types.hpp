#ifndef VEMADAPT_TYPES_HPP
#define VEMADAPT_TYPES_HPP

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vemadapt {

using Index = std::int64_t;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

using Point2 = Vec2<double>;

/// Voigt ordering (xx, yy, xy) for stress; engineering shear for strain.
template <typename Scalar>
using Voigt = Eigen::Matrix<Scalar, 3, 1>;

using Voigt3 = Voigt<double>;

enum class MeshType { Structured, Voronoi };

inline const char* to_string(MeshType t) { return t == MeshType::Structured ? "structured" : "voronoi"; }

// Error hierarchy. Every failure raised by the library derives from Error so
// callers (the CLI in particular) can catch once.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TopologyError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class DegenerateSeedError : public Error {
public:
    using Error::Error;
};

class MaterialError : public Error {
public:
    using Error::Error;
};

class DegenerateElementError : public Error {
public:
    using Error::Error;
};

class ConstraintError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace vemadapt

#endif  // VEMADAPT_TYPES_HPP
