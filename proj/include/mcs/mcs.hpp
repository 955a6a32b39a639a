#pragma once

#include "mcs/baselines.hpp"
#include "mcs/config.hpp"
#include "mcs/domain.hpp"
#include "mcs/error.hpp"
#include "mcs/experiment.hpp"
#include "mcs/generation.hpp"
#include "mcs/net.hpp"
#include "mcs/protocol.hpp"
#include "mcs/reward.hpp"
#include "mcs/rng.hpp"
#include "mcs/simulator.hpp"
