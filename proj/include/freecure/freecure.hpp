#pragma once

#include "freecure/analytic/backend.hpp"
#include "freecure/analytic/evaluators.hpp"
#include "freecure/analytic/face.hpp"
#include "freecure/analytic/parser.hpp"
#include "freecure/analytic/vocabulary.hpp"
#include "freecure/attention.hpp"
#include "freecure/backend.hpp"
#include "freecure/capture.hpp"
#include "freecure/commands.hpp"
#include "freecure/conditioning.hpp"
#include "freecure/corpus.hpp"
#include "freecure/engine.hpp"
#include "freecure/errors.hpp"
#include "freecure/io/fct.hpp"
#include "freecure/io/png.hpp"
#include "freecure/manifest.hpp"
#include "freecure/metrics.hpp"
#include "freecure/plugin.hpp"
#include "freecure/prompt.hpp"
#include "freecure/rofa.hpp"
#include "freecure/same.hpp"
#include "freecure/schedule.hpp"
#include "freecure/sweep.hpp"
#include "freecure/tensor.hpp"
