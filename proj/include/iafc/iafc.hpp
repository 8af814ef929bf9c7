#pragma once

#include "iafc/analytic.hpp"
#include "iafc/backward.hpp"
#include "iafc/comb.hpp"
#include "iafc/ensemble.hpp"
#include "iafc/error.hpp"
#include "iafc/random.hpp"
#include "iafc/spectral.hpp"
#include "iafc/units.hpp"
#include "iafc/version.hpp"
