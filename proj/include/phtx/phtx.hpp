#pragma once

#include "phtx/control.hpp"
#include "phtx/errors.hpp"
#include "phtx/experiments.hpp"
#include "phtx/info_phase.hpp"
#include "phtx/manifold.hpp"
#include "phtx/planner.hpp"
#include "phtx/spin_core.hpp"
#include "phtx/text_io.hpp"
#include "phtx/workspace.hpp"
