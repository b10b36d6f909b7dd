#pragma once

#include "movset/adjoint.hpp"
#include "movset/corners.hpp"
#include "movset/cost.hpp"
#include "movset/error.hpp"
#include "movset/frontsim.hpp"
#include "movset/geometry.hpp"
#include "movset/io.hpp"
#include "movset/raster.hpp"
#include "movset/scenario.hpp"
#include "movset/strategies.hpp"
#include "movset/trajectory.hpp"
