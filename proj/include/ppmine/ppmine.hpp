#pragma once

// Umbrella header for the privacy-preserving association-rule-mining
// toolkit: classical enciphering, share allocation, additive homomorphic
// counting, distributed Apriori, the two aggregation protocols, transports,
// and the benchmarking/verification harness.

#include "ppmine/allocator.hpp"
#include "ppmine/bench.hpp"
#include "ppmine/dataset.hpp"
#include "ppmine/ehe.hpp"
#include "ppmine/errors.hpp"
#include "ppmine/message.hpp"
#include "ppmine/mining.hpp"
#include "ppmine/protocol.hpp"
#include "ppmine/rng.hpp"
#include "ppmine/synth.hpp"
#include "ppmine/transport.hpp"
#include "ppmine/verify.hpp"
#include "ppmine/vigenere.hpp"
