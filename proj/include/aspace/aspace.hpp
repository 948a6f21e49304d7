#pragma once

// Umbrella header for the whole library.

#include "aspace/common.hpp"
#include "aspace/orientation.hpp"
#include "aspace/robot_model.hpp"
#include "aspace/kinematics.hpp"
#include "aspace/dynamics.hpp"
#include "aspace/world.hpp"
#include "aspace/safety.hpp"
#include "aspace/action_space.hpp"
#include "aspace/rollout.hpp"
#include "aspace/trajectory.hpp"
#include "aspace/tasks.hpp"
#include "aspace/metrics.hpp"
#include "aspace/mlp.hpp"
#include "aspace/ppo.hpp"
#include "aspace/scripted_policy.hpp"
#include "aspace/bench/run_config.hpp"
#include "aspace/bench/suite.hpp"
#include "aspace/bench/evaluate.hpp"
#include "aspace/bench/svg.hpp"
#include "aspace/bench/report.hpp"
