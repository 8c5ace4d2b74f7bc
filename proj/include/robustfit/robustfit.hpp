#pragma once

#include "robustfit/common.hpp"
#include "robustfit/curves.hpp"
#include "robustfit/data.hpp"
#include "robustfit/dataset.hpp"
#include "robustfit/diagnostics.hpp"
#include "robustfit/fitting.hpp"
#include "robustfit/inference.hpp"
#include "robustfit/linalg.hpp"
#include "robustfit/optimize.hpp"
#include "robustfit/prediction.hpp"
#include "robustfit/rng.hpp"
#include "robustfit/scoring.hpp"
#include "robustfit/simulation.hpp"
#include "robustfit/special.hpp"
