#pragma once

#include "viscidlab/analysis.hpp"
#include "viscidlab/biot_savart.hpp"
#include "viscidlab/camp_norms.hpp"
#include "viscidlab/flow_map.hpp"
#include "viscidlab/grid.hpp"
#include "viscidlab/initial_data.hpp"
#include "viscidlab/interpolate.hpp"
#include "viscidlab/io.hpp"
#include "viscidlab/lab.hpp"
#include "viscidlab/parallel.hpp"
#include "viscidlab/spectral.hpp"
#include "viscidlab/timestep.hpp"
