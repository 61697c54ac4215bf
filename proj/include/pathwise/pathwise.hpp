#pragma once

// Umbrella header: every module of the library except the command-line driver.

#include <pathwise/errors.hpp>
#include <pathwise/rng.hpp>
#include <pathwise/path.hpp>
#include <pathwise/pathkit.hpp>
#include <pathwise/dispersion.hpp>
#include <pathwise/transform.hpp>
#include <pathwise/drift.hpp>
#include <pathwise/ofe_solver.hpp>
#include <pathwise/assemble.hpp>
#include <pathwise/experiments.hpp>
#include <pathwise/config.hpp>
