#pragma once

#include "lerspin/config.hpp"
#include "lerspin/core.hpp"
#include "lerspin/csv.hpp"
#include "lerspin/discretize.hpp"
#include "lerspin/dispersive.hpp"
#include "lerspin/dynamics.hpp"
#include "lerspin/fields.hpp"
#include "lerspin/fit.hpp"
#include "lerspin/fit_models.hpp"
#include "lerspin/ode.hpp"
#include "lerspin/relaxation.hpp"
#include "lerspin/svg.hpp"
#include "lerspin/trace.hpp"
#include "lerspin/transmission.hpp"
