#pragma once

#include "wismc/artifact.hpp"
#include "wismc/csv.hpp"
#include "wismc/errors.hpp"
#include "wismc/estimation.hpp"
#include "wismc/index_process.hpp"
#include "wismc/kernel.hpp"
#include "wismc/market_data.hpp"
#include "wismc/rng.hpp"
#include "wismc/simulation.hpp"
#include "wismc/statistics.hpp"
