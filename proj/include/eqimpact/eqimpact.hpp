#pragma once

#include "eqimpact/dataset.hpp"
#include "eqimpact/error.hpp"
#include "eqimpact/io.hpp"
#include "eqimpact/metrics.hpp"
#include "eqimpact/oracle.hpp"
#include "eqimpact/random.hpp"
#include "eqimpact/repair.hpp"
#include "eqimpact/simplex.hpp"
#include "eqimpact/stats.hpp"
#include "eqimpact/synth.hpp"
#include "eqimpact/utility.hpp"
