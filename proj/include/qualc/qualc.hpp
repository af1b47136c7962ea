#pragma once

// Umbrella header for the qualc toolkit.

#include "qualc/asp.hpp"
#include "qualc/calculus.hpp"
#include "qualc/error.hpp"
#include "qualc/geo.hpp"
#include "qualc/network.hpp"
#include "qualc/relation_set.hpp"
#include "qualc/report.hpp"
#include "qualc/solver.hpp"
#include "qualc/spec_io.hpp"
