#pragma once

#include "aggnet/baselines.hpp"
#include "aggnet/clique_policy.hpp"
#include "aggnet/errors.hpp"
#include "aggnet/geometry.hpp"
#include "aggnet/graphs.hpp"
#include "aggnet/harness.hpp"
#include "aggnet/random.hpp"
#include "aggnet/schedule.hpp"
#include "aggnet/spatial_grid.hpp"
#include "aggnet/tradeoff.hpp"
#include "aggnet/trees.hpp"
