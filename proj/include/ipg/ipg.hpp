#pragma once

#include "ipg/envs.hpp"
#include "ipg/evaluation.hpp"
#include "ipg/exact_pg.hpp"
#include "ipg/experiment.hpp"
#include "ipg/game.hpp"
#include "ipg/io.hpp"
#include "ipg/optimistic.hpp"
#include "ipg/oracles.hpp"
#include "ipg/regression.hpp"
#include "ipg/sample_pg.hpp"
#include "ipg/sampling.hpp"
#include "ipg/selftest.hpp"
#include "ipg/simplex.hpp"
#include "ipg/trace.hpp"
