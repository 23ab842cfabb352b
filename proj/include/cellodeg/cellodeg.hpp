#pragma once

#include "cellodeg/birth_rates.hpp"
#include "cellodeg/continuous.hpp"
#include "cellodeg/grid.hpp"
#include "cellodeg/integrate.hpp"
#include "cellodeg/linalg.hpp"
#include "cellodeg/ns_equilibrium.hpp"
#include "cellodeg/ns_model.hpp"
#include "cellodeg/params.hpp"
#include "cellodeg/reduced_models.hpp"
#include "cellodeg/state.hpp"
