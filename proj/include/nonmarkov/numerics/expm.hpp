#pragma once

#include <unsupported/Eigen/MatrixFunctions>

#include "nonmarkov/operators.hpp"

namespace nonmarkov::numerics {

/// Matrix exponential by Pade approximation with scaling and squaring.
inline ComplexMatrix expm(const ComplexMatrix& m) { return m.exp(); }

}  // namespace nonmarkov::numerics
