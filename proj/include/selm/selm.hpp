#pragma once

#include "selm/core_types.hpp"
#include "selm/data.hpp"
#include "selm/elm.hpp"
#include "selm/error.hpp"
#include "selm/eval.hpp"
#include "selm/kernels.hpp"
#include "selm/pipeline.hpp"
#include "selm/protocol.hpp"
#include "selm/random.hpp"
#include "selm/serialize.hpp"
#include "selm/siamese.hpp"
#include "selm/solver.hpp"
#include "selm/triplet.hpp"
#include "selm/tuning.hpp"
#include "selm/welm.hpp"
