#pragma once

// Umbrella header.

#include "pkm/ablate.hpp"
#include "pkm/batch_norm.hpp"
#include "pkm/bench.hpp"
#include "pkm/checkpoint.hpp"
#include "pkm/corpus.hpp"
#include "pkm/errors.hpp"
#include "pkm/linear.hpp"
#include "pkm/matrix.hpp"
#include "pkm/memory_layer.hpp"
#include "pkm/metrics.hpp"
#include "pkm/op_counter.hpp"
#include "pkm/parallel.hpp"
#include "pkm/param.hpp"
#include "pkm/product_key_index.hpp"
#include "pkm/query_network.hpp"
#include "pkm/records.hpp"
#include "pkm/rng.hpp"
#include "pkm/synth_corpus.hpp"
#include "pkm/topk.hpp"
#include "pkm/trainer.hpp"
#include "pkm/transformer.hpp"
#include "pkm/value_table.hpp"
