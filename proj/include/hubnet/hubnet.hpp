#pragma once

#include "hubnet/descriptive.hpp"
#include "hubnet/diagnostics.hpp"
#include "hubnet/error.hpp"
#include "hubnet/evaluate.hpp"
#include "hubnet/hub_model.hpp"
#include "hubnet/io.hpp"
#include "hubnet/matrix.hpp"
#include "hubnet/rng.hpp"
#include "hubnet/simulate.hpp"
#include "hubnet/types.hpp"
#include "hubnet/version.hpp"
