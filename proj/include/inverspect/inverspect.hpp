#pragma once

#include "error.hpp"
#include "core.hpp"
#include "random.hpp"
#include "parallel.hpp"
#include "forward.hpp"
#include "analysis.hpp"
#include "inversion.hpp"
#include "metrics.hpp"
#include "io.hpp"
#include "experiment.hpp"
