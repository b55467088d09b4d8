#pragma once

// Umbrella header.

#include "lfht/adversarial.hpp"
#include "lfht/baseline.hpp"
#include "lfht/bump.hpp"
#include "lfht/config.hpp"
#include "lfht/dist.hpp"
#include "lfht/errors.hpp"
#include "lfht/harness.hpp"
#include "lfht/io.hpp"
#include "lfht/l2_engine.hpp"
#include "lfht/numerics.hpp"
#include "lfht/rng.hpp"
