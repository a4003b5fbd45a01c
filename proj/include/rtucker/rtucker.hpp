#pragma once

#include "rtucker/algorithms.hpp"
#include "rtucker/bench.hpp"
#include "rtucker/cpd.hpp"
#include "rtucker/io.hpp"
#include "rtucker/linalg.hpp"
#include "rtucker/random.hpp"
#include "rtucker/sketch.hpp"
#include "rtucker/sparse.hpp"
#include "rtucker/tensor.hpp"
#include "rtucker/tucker.hpp"
