#pragma once

// Umbrella header pulling in the whole toolkit.

#include "gbsim/cli.hpp"
#include "gbsim/device.hpp"
#include "gbsim/errors.hpp"
#include "gbsim/fitting.hpp"
#include "gbsim/gaussian.hpp"
#include "gbsim/graph_similarity.hpp"
#include "gbsim/matrix_kernels.hpp"
#include "gbsim/nonclassicality.hpp"
#include "gbsim/serialization.hpp"
#include "gbsim/statistics.hpp"
#include "gbsim/types.hpp"
#include "gbsim/version.hpp"
#include "gbsim/vibronic.hpp"
