#pragma once

#include "grpkmax/dataset.hpp"
#include "grpkmax/experiments.hpp"
#include "grpkmax/model.hpp"
#include "grpkmax/optimality.hpp"
#include "grpkmax/prox.hpp"
#include "grpkmax/solver.hpp"
#include "grpkmax/types.hpp"
#include "grpkmax/version.hpp"
