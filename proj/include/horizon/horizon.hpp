#pragma once

#include "horizon/errors.hpp"
#include "horizon/tsallis.hpp"
#include "horizon/parallel.hpp"
#include "horizon/grid.hpp"
#include "horizon/field.hpp"
#include "horizon/ensemble.hpp"
#include "horizon/regression.hpp"
#include "horizon/claim.hpp"
#include "horizon/context.hpp"
#include "horizon/driver.hpp"
#include "horizon/bsde.hpp"
#include "horizon/riskmeasure.hpp"
#include "horizon/diagnostics.hpp"
#include "horizon/report_io.hpp"
#include "horizon/config.hpp"
#include "horizon/runner.hpp"
