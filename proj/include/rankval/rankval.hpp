#pragma once

// Umbrella header.

#include "rankval/errors.hpp"
#include "rankval/io.hpp"
#include "rankval/lambda_curve.hpp"
#include "rankval/model.hpp"
#include "rankval/pipeline.hpp"
#include "rankval/prior_fit.hpp"
#include "rankval/ranking.hpp"
#include "rankval/rng.hpp"
#include "rankval/rvalue.hpp"
#include "rankval/simbench.hpp"
#include "rankval/tail_prob.hpp"
#include "rankval/thresholds.hpp"
