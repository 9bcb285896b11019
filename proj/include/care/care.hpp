#pragma once

#include "care/bundle.hpp"
#include "care/classify.hpp"
#include "care/corpus.hpp"
#include "care/domain.hpp"
#include "care/errors.hpp"
#include "care/eval.hpp"
#include "care/generate.hpp"
#include "care/lcs.hpp"
#include "care/models.hpp"
#include "care/pipeline.hpp"
#include "care/recipe.hpp"
#include "care/rng.hpp"
#include "care/safety.hpp"
#include "care/stats.hpp"
#include "care/strategy.hpp"
#include "care/synthetic.hpp"
#include "care/telemetry.hpp"
#include "care/text.hpp"
