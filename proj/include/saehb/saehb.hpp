#pragma once

#include "saehb/csv.hpp"
#include "saehb/diagnostics.hpp"
#include "saehb/grid.hpp"
#include "saehb/indicator.hpp"
#include "saehb/parallel.hpp"
#include "saehb/predictor.hpp"
#include "saehb/problem.hpp"
#include "saehb/rng.hpp"
#include "saehb/sampler.hpp"
#include "saehb/shift.hpp"
#include "saehb/simulation.hpp"
#include "saehb/summaries.hpp"
#include "saehb/types.hpp"
