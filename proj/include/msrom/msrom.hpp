#pragma once

#include "msrom/deim.hpp"
#include "msrom/error.hpp"
#include "msrom/fem.hpp"
#include "msrom/field.hpp"
#include "msrom/grid.hpp"
#include "msrom/msbasis.hpp"
#include "msrom/nonlinearity.hpp"
#include "msrom/online.hpp"
#include "msrom/rom.hpp"
#include "msrom/run.hpp"
#include "msrom/stepper.hpp"
#include "msrom/types.hpp"

#include "msrom/harness/config.hpp"
#include "msrom/harness/experiment.hpp"
#include "msrom/harness/presets.hpp"
#include "msrom/harness/report.hpp"
#include "msrom/harness/svg.hpp"
