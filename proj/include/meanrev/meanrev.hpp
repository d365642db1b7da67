#pragma once

#include "csv.hpp"
#include "double_stopping.hpp"
#include "majorant.hpp"
#include "mc_oracle.hpp"
#include "ou_process.hpp"
#include "params.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "root_find.hpp"
#include "special_fn.hpp"
#include "stoploss.hpp"
#include "verify.hpp"
