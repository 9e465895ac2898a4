#pragma once

#include "benchmark.hpp"
#include "config.hpp"
#include "delaunay.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "kriging.hpp"
#include "mapgen.hpp"
#include "pipeline.hpp"
#include "positioning.hpp"
#include "simulator.hpp"
#include "spline.hpp"
#include "stats.hpp"
#include "survey.hpp"
#include "variogram.hpp"
