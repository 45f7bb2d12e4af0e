// Convenience include for the whole toolkit.
#pragma once

#include "ient/chain_graph.hpp"
#include "ient/cocycle.hpp"
#include "ient/config.hpp"
#include "ient/entropy.hpp"
#include "ient/expr.hpp"
#include "ient/flow.hpp"
#include "ient/io.hpp"
#include "ient/shift_space.hpp"
#include "ient/splitting.hpp"
#include "ient/system.hpp"
#include "ient/util.hpp"
#include "ient/volume.hpp"
