#pragma once

#include "cmc.hpp"
#include "dynamics.hpp"
#include "eps_chain.hpp"
#include "errors.hpp"
#include "game.hpp"
#include "game_io.hpp"
#include "limit.hpp"
#include "response_graph.hpp"
#include "scc.hpp"
#include "solver.hpp"
