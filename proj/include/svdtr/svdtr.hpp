#pragma once

// Set-valued dynamic treatment regimes for two competing outcomes:
// plug-in set-valued rules, feasible-labeling enumeration, two-stage
// estimation, and the regret simulation study.

#include "svdtr/config.hpp"
#include "svdtr/core.hpp"
#include "svdtr/dynamic_rule.hpp"
#include "svdtr/enumeration.hpp"
#include "svdtr/io.hpp"
#include "svdtr/linprog.hpp"
#include "svdtr/pipeline.hpp"
#include "svdtr/regression.hpp"
#include "svdtr/simulation.hpp"
#include "svdtr/static_rule.hpp"
#include "svdtr/tree.hpp"
