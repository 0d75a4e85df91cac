#pragma once

#include "smc/algorithms.hpp"
#include "smc/engine.hpp"
#include "smc/error.hpp"
#include "smc/model.hpp"
#include "smc/model_parser.hpp"
#include "smc/oracle.hpp"
#include "smc/parallel.hpp"
#include "smc/property.hpp"
#include "smc/scheduler.hpp"
#include "smc/stats.hpp"
#include "smc/synthetic.hpp"
