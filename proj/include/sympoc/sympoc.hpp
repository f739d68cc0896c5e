#pragma once

#include "sympoc/checkpoint.hpp"
#include "sympoc/constraints.hpp"
#include "sympoc/dynamics.hpp"
#include "sympoc/losses.hpp"
#include "sympoc/metrics.hpp"
#include "sympoc/optim.hpp"
#include "sympoc/pseudospectral.hpp"
#include "sympoc/scenario.hpp"
#include "sympoc/scenario_json.hpp"
#include "sympoc/sympnet.hpp"
#include "sympoc/tape.hpp"
#include "sympoc/training.hpp"
#include "sympoc/trajectory.hpp"
#include "sympoc/trajectory_io.hpp"
#include "sympoc/vec.hpp"
