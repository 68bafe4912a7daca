#ifndef ACUQUANT_ACUQUANT_HPP
#define ACUQUANT_ACUQUANT_HPP

// Umbrella header for the whole library.

#include <acuquant/analyze.hpp>
#include <acuquant/attitude.hpp>
#include <acuquant/condition.hpp>
#include <acuquant/config.hpp>
#include <acuquant/core.hpp>
#include <acuquant/cycles.hpp>
#include <acuquant/error.hpp>
#include <acuquant/io.hpp>
#include <acuquant/kinematics.hpp>
#include <acuquant/pipeline.hpp>
#include <acuquant/profiles.hpp>
#include <acuquant/random.hpp>
#include <acuquant/report.hpp>
#include <acuquant/simulate.hpp>
#include <acuquant/statefuse.hpp>

#endif  // ACUQUANT_ACUQUANT_HPP
