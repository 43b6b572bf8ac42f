#pragma once

// Umbrella header: delay-type radiation-reaction dynamics for finite-size
// relativistic charged particles, with kinetic-ensemble and fluid-level
// companions.

#include "rr/bessel.hpp"
#include "rr/ensemble.hpp"
#include "rr/errors.hpp"
#include "rr/faraday.hpp"
#include "rr/fields.hpp"
#include "rr/fluid.hpp"
#include "rr/fourvector.hpp"
#include "rr/integrator.hpp"
#include "rr/kinetic.hpp"
#include "rr/scenario.hpp"
#include "rr/selfforce.hpp"
#include "rr/synthetic.hpp"
#include "rr/version.hpp"
#include "rr/worldline.hpp"
