#pragma once

#include "channel.hpp"
#include "compare.hpp"
#include "dqn.hpp"
#include "error.hpp"
#include "gridworld.hpp"
#include "maze.hpp"
#include "mlp.hpp"
#include "pathcodec.hpp"
#include "pathserver.hpp"
#include "qlearning.hpp"
#include "robotsim.hpp"
