#pragma once

#include "momentlift/errors.hpp"
#include "momentlift/geometry.hpp"
#include "momentlift/io.hpp"
#include "momentlift/lifting.hpp"
#include "momentlift/moments.hpp"
#include "momentlift/objects.hpp"
#include "momentlift/parallel.hpp"
#include "momentlift/quadrature.hpp"
#include "momentlift/rng.hpp"
