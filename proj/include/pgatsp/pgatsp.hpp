#pragma once

// Umbrella header.

#include "bench.hpp"
#include "codec.hpp"
#include "convergence.hpp"
#include "ga.hpp"
#include "island.hpp"
#include "mapreduce.hpp"
#include "oracle.hpp"
#include "report.hpp"
#include "tsplib.hpp"
#include "worker_pool.hpp"
