#pragma once

// Umbrella header: event-triggered synchronization toolkit for linear
// dynamical networks. Pull in everything; each header also stands alone.

#include "etsync/config.hpp"
#include "etsync/errors.hpp"
#include "etsync/gains.hpp"
#include "etsync/graph.hpp"
#include "etsync/matrix.hpp"
#include "etsync/metrics.hpp"
#include "etsync/numerics.hpp"
#include "etsync/reports.hpp"
#include "etsync/rng.hpp"
#include "etsync/scenario.hpp"
#include "etsync/simulator.hpp"
#include "etsync/validate.hpp"
