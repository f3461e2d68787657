#pragma once

#include "config.hpp"
#include "constants.hpp"
#include "distribution.hpp"
#include "experiment.hpp"
#include "finite_field.hpp"
#include "gmax.hpp"
#include "partial_sums.hpp"
#include "random_model.hpp"
#include "trace_families.hpp"
