#pragma once
// Umbrella header for the a3rank library.

#include "a3rank/error.hpp"
#include "a3rank/record.hpp"
#include "a3rank/alignment.hpp"
#include "a3rank/parallel.hpp"
#include "a3rank/csv.hpp"
#include "a3rank/baselines.hpp"
#include "a3rank/rejection.hpp"
#include "a3rank/detector.hpp"
#include "a3rank/two_stage.hpp"
#include "a3rank/wilcoxon.hpp"
#include "a3rank/evaluation.hpp"
#include "a3rank/synthetic.hpp"
#include "a3rank/pipeline.hpp"
