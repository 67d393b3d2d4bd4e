#pragma once

#include "scbgd/analysis.hpp"
#include "scbgd/block.hpp"
#include "scbgd/format.hpp"
#include "scbgd/harness.hpp"
#include "scbgd/problems.hpp"
#include "scbgd/sampling.hpp"
#include "scbgd/solver.hpp"
#include "scbgd/steps.hpp"
#include "scbgd/types.hpp"
#include "scbgd/verify.hpp"
