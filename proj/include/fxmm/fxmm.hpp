#pragma once

// Umbrella header for the whole library.
#include "fxmm/autocorrelation.hpp"
#include "fxmm/config.hpp"
#include "fxmm/errors.hpp"
#include "fxmm/flow_io.hpp"
#include "fxmm/flow_model.hpp"
#include "fxmm/frontier.hpp"
#include "fxmm/hamiltonians.hpp"
#include "fxmm/hjb_solver.hpp"
#include "fxmm/intensity.hpp"
#include "fxmm/model_params.hpp"
#include "fxmm/simulator.hpp"
#include "fxmm/strategy_io.hpp"
#include "fxmm/strategy_table.hpp"
#include "fxmm/tiering.hpp"
