#pragma once

#include "nonmarkov/classify.hpp"
#include "nonmarkov/divisibility.hpp"
#include "nonmarkov/errors.hpp"
#include "nonmarkov/measures.hpp"
#include "nonmarkov/models.hpp"
#include "nonmarkov/numerics/differentiation.hpp"
#include "nonmarkov/numerics/expm.hpp"
#include "nonmarkov/numerics/ode.hpp"
#include "nonmarkov/numerics/optimize.hpp"
#include "nonmarkov/numerics/quadrature.hpp"
#include "nonmarkov/numerics/random.hpp"
#include "nonmarkov/operators.hpp"
#include "nonmarkov/trajectory.hpp"
