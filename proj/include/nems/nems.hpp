// nems.hpp - umbrella header for the solver library

#pragma once

#include "nems/correlation.hpp"
#include "nems/errors.hpp"
#include "nems/fock.hpp"
#include "nems/grid.hpp"
#include "nems/lamb_shift.hpp"
#include "nems/leads.hpp"
#include "nems/master_equation.hpp"
#include "nems/observables.hpp"
#include "nems/parallel.hpp"
#include "nems/steady_state.hpp"
#include "nems/transport.hpp"
#include "nems/units.hpp"
