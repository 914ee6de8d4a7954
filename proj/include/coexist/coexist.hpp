// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.

#pragma once

#include "coexist/core.hpp"
#include "coexist/scenario.hpp"
#include "coexist/signal_model.hpp"
#include "coexist/radar_opt.hpp"
#include "coexist/comm_opt.hpp"
#include "coexist/solver.hpp"
#include "coexist/baselines.hpp"
#include "coexist/config.hpp"
#include "coexist/experiments.hpp"
