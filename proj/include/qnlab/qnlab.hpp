#pragma once

// Umbrella header for the whole library.

#include "qnlab/circle_measure.hpp"
#include "qnlab/errors.hpp"
#include "qnlab/euler.hpp"
#include "qnlab/fft.hpp"
#include "qnlab/green.hpp"
#include "qnlab/grid.hpp"
#include "qnlab/initial_data.hpp"
#include "qnlab/modulated_energy.hpp"
#include "qnlab/mollifier.hpp"
#include "qnlab/nbody.hpp"
#include "qnlab/poisson_boltzmann.hpp"
#include "qnlab/schrodinger.hpp"
