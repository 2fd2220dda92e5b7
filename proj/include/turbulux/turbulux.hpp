#pragma once

#include "turbulux/analytic.hpp"
#include "turbulux/channel.hpp"
#include "turbulux/error.hpp"
#include "turbulux/matching.hpp"
#include "turbulux/numerics.hpp"
#include "turbulux/pdt.hpp"
#include "turbulux/quantum.hpp"
#include "turbulux/simulator.hpp"
#include "turbulux/stats.hpp"
