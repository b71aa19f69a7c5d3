#pragma once

#include "granular/velocity_grid.hpp"
#include "granular/parallel.hpp"
#include "granular/collision.hpp"
#include "granular/lapack.hpp"
#include "granular/linop.hpp"
#include "granular/equilibrium.hpp"
#include "granular/spectrum.hpp"
#include "granular/dispersion.hpp"
#include "granular/io.hpp"
#include "granular/config.hpp"
#include "granular/verification.hpp"
