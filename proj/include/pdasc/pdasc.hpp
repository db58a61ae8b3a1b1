#pragma once

#include "pdasc/bench.hpp"
#include "pdasc/dataset.hpp"
#include "pdasc/distance.hpp"
#include "pdasc/error.hpp"
#include "pdasc/kmedoids.hpp"
#include "pdasc/msa.hpp"
#include "pdasc/nsa.hpp"
#include "pdasc/storage.hpp"
#include "pdasc/synthetic.hpp"
