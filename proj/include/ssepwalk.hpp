#pragma once

#include "ssepwalk/core.hpp"
#include "ssepwalk/errors.hpp"
#include "ssepwalk/estimators.hpp"
#include "ssepwalk/event_log_io.hpp"
#include "ssepwalk/generator_oracle.hpp"
#include "ssepwalk/lattice.hpp"
#include "ssepwalk/random.hpp"
#include "ssepwalk/ssep.hpp"
#include "ssepwalk/stats.hpp"
#include "ssepwalk/walk.hpp"
