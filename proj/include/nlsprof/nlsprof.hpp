#pragma once

#include "nlsprof/error.hpp"
#include "nlsprof/grid.hpp"
#include "nlsprof/potential.hpp"
#include "nlsprof/spectrum.hpp"
#include "nlsprof/resonance.hpp"
#include "nlsprof/spline.hpp"
#include "nlsprof/bound_states.hpp"
#include "nlsprof/decomposition.hpp"
#include "nlsprof/propagator.hpp"
#include "nlsprof/trajectory.hpp"
#include "nlsprof/normal_form.hpp"
#include "nlsprof/fits.hpp"
#include "nlsprof/report.hpp"
#include "nlsprof/classifier.hpp"
#include "nlsprof/inequalities.hpp"
#include "nlsprof/config.hpp"
#include "nlsprof/experiment.hpp"
