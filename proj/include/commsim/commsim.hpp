#pragma once

#include "commsim/commands.hpp"
#include "commsim/config.hpp"
#include "commsim/decomposition.hpp"
#include "commsim/detection.hpp"
#include "commsim/error.hpp"
#include "commsim/evaluator.hpp"
#include "commsim/expansion.hpp"
#include "commsim/generators.hpp"
#include "commsim/graph.hpp"
#include "commsim/integrator.hpp"
#include "commsim/models.hpp"
#include "commsim/observables.hpp"
#include "commsim/partition.hpp"
