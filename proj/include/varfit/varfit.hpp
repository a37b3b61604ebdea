#pragma once

#include "varfit/data.hpp"
#include "varfit/error.hpp"
#include "varfit/io.hpp"
#include "varfit/map_fit.hpp"
#include "varfit/pipeline.hpp"
#include "varfit/point_cloud.hpp"
#include "varfit/poly.hpp"
#include "varfit/rng.hpp"
#include "varfit/sampling.hpp"
#include "varfit/singular.hpp"
#include "varfit/transport.hpp"
