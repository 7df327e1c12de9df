#pragma once

#include "proxcat/checkers.hpp"
#include "proxcat/engine.hpp"
#include "proxcat/errors.hpp"
#include "proxcat/geometry.hpp"
#include "proxcat/log.hpp"
#include "proxcat/rates.hpp"
#include "proxcat/resolvents.hpp"
#include "proxcat/rng.hpp"
#include "proxcat/sampling.hpp"
#include "proxcat/scenario.hpp"
