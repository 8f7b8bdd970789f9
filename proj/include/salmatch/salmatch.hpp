#pragma once

#include "errors.hpp"
#include "numeric.hpp"
#include "market.hpp"
#include "stable.hpp"
#include "lp.hpp"
#include "pair_program.hpp"
#include "robustness.hpp"
#include "relaxation.hpp"
#include "search.hpp"
#include "maxflow.hpp"
#include "tradeoff.hpp"
#include "geometry.hpp"
#include "experiments.hpp"
#include "io.hpp"
