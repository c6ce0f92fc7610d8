#pragma once

// Umbrella header.

#include "regsim/adversary.hpp"
#include "regsim/errors.hpp"
#include "regsim/harness.hpp"
#include "regsim/histories.hpp"
#include "regsim/minimax.hpp"
#include "regsim/program.hpp"
#include "regsim/registers.hpp"
#include "regsim/sim.hpp"
#include "regsim/trace.hpp"
#include "regsim/values.hpp"
