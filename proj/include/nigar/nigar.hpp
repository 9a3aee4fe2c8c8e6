#pragma once

#include "nigar/ar.hpp"
#include "nigar/bessel.hpp"
#include "nigar/diagnostics.hpp"
#include "nigar/estimators.hpp"
#include "nigar/experiment.hpp"
#include "nigar/io.hpp"
#include "nigar/nig.hpp"
#include "nigar/pipeline.hpp"
#include "nigar/rng.hpp"
#include "nigar/stats.hpp"
