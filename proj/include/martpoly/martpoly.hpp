#pragma once

#include "martpoly/analysis.hpp"
#include "martpoly/errors.hpp"
#include "martpoly/exactmath.hpp"
#include "martpoly/geometry.hpp"
#include "martpoly/io.hpp"
#include "martpoly/market.hpp"
#include "martpoly/models.hpp"
#include "martpoly/multiperiod.hpp"
