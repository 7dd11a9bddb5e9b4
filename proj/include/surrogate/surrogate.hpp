#pragma once

#include "surrogate/analysis.hpp"
#include "surrogate/csv.hpp"
#include "surrogate/error.hpp"
#include "surrogate/features.hpp"
#include "surrogate/forest.hpp"
#include "surrogate/hash.hpp"
#include "surrogate/labeling.hpp"
#include "surrogate/numerics.hpp"
#include "surrogate/pipeline.hpp"
#include "surrogate/rng.hpp"
#include "surrogate/sampler.hpp"
#include "surrogate/schema.hpp"
#include "surrogate/toyabm.hpp"
