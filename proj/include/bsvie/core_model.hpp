#pragma once

// Domain types shared by every solver.

#include "bsvie/driver.hpp"
#include "bsvie/errors.hpp"
#include "bsvie/modulus.hpp"
#include "bsvie/paths.hpp"
#include "bsvie/processes.hpp"
#include "bsvie/time_grid.hpp"
#include "bsvie/weights.hpp"
