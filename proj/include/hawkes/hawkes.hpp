#pragma once

// Umbrella header for the squared-GP Hawkes library.

#include "hawkes/baselines.hpp"
#include "hawkes/cli.hpp"
#include "hawkes/emv.hpp"
#include "hawkes/errors.hpp"
#include "hawkes/eval.hpp"
#include "hawkes/event_sequence.hpp"
#include "hawkes/gp.hpp"
#include "hawkes/kernels.hpp"
#include "hawkes/model_io.hpp"
#include "hawkes/optim.hpp"
#include "hawkes/quadrature.hpp"
#include "hawkes/simulate.hpp"
#include "hawkes/stats.hpp"
#include "hawkes/toeplitz.hpp"
