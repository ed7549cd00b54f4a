#pragma once

#include "bcirepair/config.hpp"
#include "bcirepair/datamodel.hpp"
#include "bcirepair/decoders.hpp"
#include "bcirepair/error.hpp"
#include "bcirepair/evaluation.hpp"
#include "bcirepair/heuristics.hpp"
#include "bcirepair/localization.hpp"
#include "bcirepair/oracles.hpp"
#include "bcirepair/repair.hpp"
#include "bcirepair/rng.hpp"
#include "bcirepair/slicing.hpp"
#include "bcirepair/stats.hpp"
#include "bcirepair/synthgen.hpp"
