#pragma once

#include "madkit/distributions.hpp"
#include "madkit/errors.hpp"
#include "madkit/factor_tables.hpp"
#include "madkit/mad.hpp"
#include "madkit/quantiles.hpp"
#include "madkit/report.hpp"
#include "madkit/rng.hpp"
#include "madkit/simulate.hpp"
#include "madkit/specfun.hpp"
