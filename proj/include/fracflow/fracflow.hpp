#pragma once

#include "fracflow/error.hpp"
#include "fracflow/model.hpp"
#include "fracflow/grid.hpp"
#include "fracflow/functionals.hpp"
#include "fracflow/initial_data.hpp"
#include "fracflow/variational.hpp"
#include "fracflow/flow.hpp"
#include "fracflow/verify.hpp"
