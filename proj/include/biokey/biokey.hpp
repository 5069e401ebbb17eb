#pragma once

#include "biokey/base_graph.hpp"
#include "biokey/bitvec.hpp"
#include "biokey/commitment.hpp"
#include "biokey/decoder.hpp"
#include "biokey/generator.hpp"
#include "biokey/metrics.hpp"
#include "biokey/neural.hpp"
#include "biokey/parity_check.hpp"
#include "biokey/pipeline.hpp"
#include "biokey/prng.hpp"
#include "biokey/quantizer.hpp"
#include "biokey/sha256.hpp"
#include "biokey/simulation.hpp"
#include "biokey/util.hpp"
