#pragma once

#include "alignkit/analysis.hpp"
#include "alignkit/backend.hpp"
#include "alignkit/config.hpp"
#include "alignkit/dispatcher.hpp"
#include "alignkit/errors.hpp"
#include "alignkit/hash.hpp"
#include "alignkit/http_backend.hpp"
#include "alignkit/judge.hpp"
#include "alignkit/jsonl.hpp"
#include "alignkit/kmeans.hpp"
#include "alignkit/log.hpp"
#include "alignkit/mock_backend.hpp"
#include "alignkit/orchestrator.hpp"
#include "alignkit/promptsynth.hpp"
#include "alignkit/records.hpp"
#include "alignkit/responsesynth.hpp"
#include "alignkit/rng.hpp"
#include "alignkit/store.hpp"
#include "alignkit/version.hpp"
