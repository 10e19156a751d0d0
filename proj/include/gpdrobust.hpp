#pragma once

#include "gpdrobust/errors.hpp"
#include "gpdrobust/linalg.hpp"
#include "gpdrobust/special.hpp"
#include "gpdrobust/gpd.hpp"
#include "gpdrobust/quadrature.hpp"
#include "gpdrobust/roots.hpp"
#include "gpdrobust/optimize.hpp"
#include "gpdrobust/lagrange.hpp"
#include "gpdrobust/influence.hpp"
#include "gpdrobust/optimal.hpp"
#include "gpdrobust/grid.hpp"
#include "gpdrobust/estimate.hpp"
#include "gpdrobust/estimators/start.hpp"
#include "gpdrobust/estimators/classic.hpp"
#include "gpdrobust/onestep.hpp"
#include "gpdrobust/estimators/registry.hpp"
#include "gpdrobust/simulation.hpp"
#include "gpdrobust/io.hpp"
