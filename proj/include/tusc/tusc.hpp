#pragma once

// Umbrella header.

#include <tusc/rational.hpp>
#include <tusc/types.hpp>
#include <tusc/core.hpp>
#include <tusc/slack.hpp>
#include <tusc/witness.hpp>
#include <tusc/equilibrium.hpp>
#include <tusc/deviation.hpp>
#include <tusc/io.hpp>
