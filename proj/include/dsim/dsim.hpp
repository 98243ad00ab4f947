#pragma once

// Umbrella header for the discharge-education simulation harness.

#include "dsim/analysis.hpp"
#include "dsim/artifacts.hpp"
#include "dsim/backend.hpp"
#include "dsim/config.hpp"
#include "dsim/engine.hpp"
#include "dsim/error.hpp"
#include "dsim/exam.hpp"
#include "dsim/external_scorer.hpp"
#include "dsim/http_backend.hpp"
#include "dsim/judge.hpp"
#include "dsim/metrics.hpp"
#include "dsim/prompts.hpp"
#include "dsim/report.hpp"
#include "dsim/rubrics.hpp"
#include "dsim/run_record.hpp"
#include "dsim/runner.hpp"
#include "dsim/scenario.hpp"
#include "dsim/stages.hpp"
#include "dsim/util.hpp"
