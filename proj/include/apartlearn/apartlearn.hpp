#pragma once

// Umbrella header: active learning of Mealy machines over an observation
// tree with an explicit apartness relation.

#include "ads.hpp"
#include "bench.hpp"
#include "core.hpp"
#include "dot.hpp"
#include "learner.hpp"
#include "log.hpp"
#include "mealy.hpp"
#include "obs_tree.hpp"
#include "oracle.hpp"
