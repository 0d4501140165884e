#pragma once

#include "config.hpp"
#include "decay.hpp"
#include "dynamics.hpp"
#include "frequency.hpp"
#include "hermite.hpp"
#include "nonlinearity.hpp"
#include "normal_form.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "polynomial.hpp"
#include "random.hpp"
#include "state.hpp"
#include "stats.hpp"
#include "svg.hpp"
#include "tuple_stats.hpp"
