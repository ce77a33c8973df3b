#pragma once

#include "branching.hpp"
#include "config.hpp"
#include "experiment.hpp"
#include "kpp.hpp"
#include "levy_motion.hpp"
#include "limit_process.hpp"
#include "normalization.hpp"
#include "pipelines.hpp"
#include "point_measure.hpp"
#include "random.hpp"
#include "stats.hpp"
#include "tree.hpp"
