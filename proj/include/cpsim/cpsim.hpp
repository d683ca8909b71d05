#pragma once

// Helper selection, resource-block allocation and late-fusion evaluation for
// cooperative perception over lossy V2V links. Header-only; everything lives
// in namespace cpsim.

#include "cpsim/allocator.hpp"
#include "cpsim/comms.hpp"
#include "cpsim/errors.hpp"
#include "cpsim/fusion.hpp"
#include "cpsim/harness.hpp"
#include "cpsim/io.hpp"
#include "cpsim/objectives.hpp"
#include "cpsim/random.hpp"
#include "cpsim/scenario.hpp"
#include "cpsim/selector.hpp"
