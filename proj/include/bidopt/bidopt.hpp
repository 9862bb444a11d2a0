#pragma once

#include "bidopt/config.hpp"
#include "bidopt/core.hpp"
#include "bidopt/gp.hpp"
#include "bidopt/harness.hpp"
#include "bidopt/model.hpp"
#include "bidopt/optimizer.hpp"
#include "bidopt/rng.hpp"
#include "bidopt/sampling.hpp"
#include "bidopt/simulator.hpp"
