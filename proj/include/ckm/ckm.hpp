#pragma once

#include "ckm/error.hpp"
#include "ckm/flow.hpp"
#include "ckm/generators.hpp"
#include "ckm/geometry.hpp"
#include "ckm/hyperbucket.hpp"
#include "ckm/io.hpp"
#include "ckm/listgen.hpp"
#include "ckm/matching.hpp"
#include "ckm/oracle.hpp"
#include "ckm/parallel.hpp"
#include "ckm/partition.hpp"
#include "ckm/random.hpp"
#include "ckm/sampling.hpp"
#include "ckm/seeding.hpp"
#include "ckm/stability.hpp"
#include "ckm/stream.hpp"
#include "ckm/streamdriver.hpp"
