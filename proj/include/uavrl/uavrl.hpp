#pragma once

#include "uavrl/agents.hpp"
#include "uavrl/channel.hpp"
#include "uavrl/environment.hpp"
#include "uavrl/experiments.hpp"
#include "uavrl/metrics.hpp"
#include "uavrl/network.hpp"
#include "uavrl/rng.hpp"
