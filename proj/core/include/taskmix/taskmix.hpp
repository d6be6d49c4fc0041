#pragma once

/// Umbrella header pulling in the whole public surface.

#include "taskmix/data_io.hpp"
#include "taskmix/errors.hpp"
#include "taskmix/eval.hpp"
#include "taskmix/math.hpp"
#include "taskmix/model.hpp"
#include "taskmix/optimize.hpp"
#include "taskmix/rng.hpp"
#include "taskmix/serialize.hpp"
#include "taskmix/solvers.hpp"
#include "taskmix/structure.hpp"
#include "taskmix/types.hpp"
#include "taskmix/vi.hpp"
