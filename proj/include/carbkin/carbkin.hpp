#pragma once

#include "batch.hpp"
#include "chem.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "kinetics.hpp"
#include "ode.hpp"
#include "ratedb.hpp"
#include "validate.hpp"
