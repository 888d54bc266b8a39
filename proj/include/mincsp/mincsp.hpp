#pragma once

// Umbrella header for the whole library.

#include <mincsp/classifier.hpp>
#include <mincsp/core_endo.hpp>
#include <mincsp/language.hpp>
#include <mincsp/mm_graph.hpp>
#include <mincsp/morphisms.hpp>
#include <mincsp/oracle.hpp>
#include <mincsp/rational.hpp>
#include <mincsp/sfm.hpp>
#include <mincsp/solver.hpp>
