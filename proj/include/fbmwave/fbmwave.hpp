#pragma once

#include "fbmwave/hurst.hpp"
#include "fbmwave/rng.hpp"
#include "fbmwave/fbm.hpp"
#include "fbmwave/matrix.hpp"
#include "fbmwave/spectral.hpp"
#include "fbmwave/time_grid.hpp"
#include "fbmwave/kernels.hpp"
#include "fbmwave/forward.hpp"
#include "fbmwave/estimator.hpp"
#include "fbmwave/inverse.hpp"
#include "fbmwave/csv_io.hpp"
#include "fbmwave/experiment.hpp"
