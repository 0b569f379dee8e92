#pragma once

#include "specscale/config.hpp"
#include "specscale/draft_tree.hpp"
#include "specscale/error.hpp"
#include "specscale/format.hpp"
#include "specscale/rng.hpp"
#include "specscale/roofline.hpp"
#include "specscale/scaling.hpp"
#include "specscale/simulator.hpp"
#include "specscale/toy_lm.hpp"
#include "specscale/verify.hpp"
#include "specscale/workload.hpp"
