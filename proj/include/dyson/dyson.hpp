#pragma once

// Umbrella header for the dyson-lab library.

#include "dyson/grid.hpp"
#include "dyson/rng.hpp"
#include "dyson/measure.hpp"
#include "dyson/hilbert.hpp"
#include "dyson/half_laplacian.hpp"
#include "dyson/entropy.hpp"
#include "dyson/fourier.hpp"
#include "dyson/wasserstein.hpp"
#include "dyson/semicircle.hpp"
#include "dyson/marchenko_pastur.hpp"
#include "dyson/burgers.hpp"
#include "dyson/spike.hpp"
#include "dyson/kernel.hpp"
#include "dyson/particle.hpp"
#include "dyson/flow_record.hpp"
#include "dyson/cdf_solver.hpp"
#include "dyson/density_solver.hpp"
#include "dyson/diagnostics.hpp"
#include "dyson/io.hpp"
#include "dyson/config.hpp"
