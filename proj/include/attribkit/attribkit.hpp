#pragma once

#include "attribkit/attribution.hpp"
#include "attribkit/axioms.hpp"
#include "attribkit/comparison.hpp"
#include "attribkit/compensation.hpp"
#include "attribkit/cost.hpp"
#include "attribkit/dataset.hpp"
#include "attribkit/io.hpp"
#include "attribkit/logit_function.hpp"
#include "attribkit/model.hpp"
#include "attribkit/model_io.hpp"
#include "attribkit/parallel.hpp"
#include "attribkit/record.hpp"
#include "attribkit/rng.hpp"
#include "attribkit/spearman.hpp"
#include "attribkit/tensor.hpp"
#include "attribkit/textio.hpp"
#include "attribkit/train.hpp"
