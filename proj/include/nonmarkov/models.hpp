#pragma once

#include "nonmarkov/models/integro.hpp"
#include "nonmarkov/models/qubit.hpp"
#include "nonmarkov/models/semigroup.hpp"
#include "nonmarkov/models/toy.hpp"
