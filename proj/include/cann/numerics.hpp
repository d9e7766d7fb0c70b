#pragma once

#include "cann/numerics/batch_norm.hpp"
#include "cann/numerics/ops.hpp"
#include "cann/numerics/parameters.hpp"
#include "cann/numerics/random.hpp"
#include "cann/numerics/tensor.hpp"
