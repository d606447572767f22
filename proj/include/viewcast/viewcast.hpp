#pragma once

#include "viewcast/core.hpp"
#include "viewcast/corpus.hpp"
#include "viewcast/errors.hpp"
#include "viewcast/eval.hpp"
#include "viewcast/events.hpp"
#include "viewcast/features.hpp"
#include "viewcast/harness.hpp"
#include "viewcast/learn.hpp"
#include "viewcast/lim.hpp"
#include "viewcast/parallel.hpp"
#include "viewcast/synth.hpp"
