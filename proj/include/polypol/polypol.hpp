#pragma once

// Umbrella header.

#include "polypol/error.hpp"
#include "polypol/linsolve.hpp"
#include "polypol/maxplus.hpp"
#include "polypol/mdp.hpp"
#include "polypol/model_io.hpp"
#include "polypol/param_core.hpp"
#include "polypol/rational.hpp"
