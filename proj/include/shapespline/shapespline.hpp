#pragma once

#include "shapespline/types.hpp"
#include "shapespline/geometry.hpp"
#include "shapespline/sylvester.hpp"
#include "shapespline/transport.hpp"
#include "shapespline/path.hpp"
#include "shapespline/rolling.hpp"
#include "shapespline/euclid_spline.hpp"
#include "shapespline/fitter.hpp"
#include "shapespline/experiments.hpp"
#include "shapespline/io.hpp"
