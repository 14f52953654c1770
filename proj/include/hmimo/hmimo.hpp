#pragma once

#include "hmimo/capacity.hpp"
#include "hmimo/channel.hpp"
#include "hmimo/constants.hpp"
#include "hmimo/error.hpp"
#include "hmimo/farfield.hpp"
#include "hmimo/geometry.hpp"
#include "hmimo/nearfield.hpp"
#include "hmimo/parallel.hpp"
#include "hmimo/quadrature.hpp"
#include "hmimo/random.hpp"
#include "hmimo/specfun.hpp"
