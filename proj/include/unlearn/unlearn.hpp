#pragma once

// Umbrella header for the whole library.

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/mechanism.hpp"
#include "unlearn/dataset.hpp"
#include "unlearn/linalg.hpp"
#include "unlearn/median.hpp"
#include "unlearn/mst.hpp"
#include "unlearn/pca.hpp"
#include "unlearn/svm.hpp"
#include "unlearn/erm.hpp"
#include "unlearn/active.hpp"
#include "unlearn/harness/csv.hpp"
#include "unlearn/harness/ingest.hpp"
#include "unlearn/harness/synthetic.hpp"
#include "unlearn/harness/experiment.hpp"
