// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Umbrella header.

#pragma once

#include "saab/bounds.hpp"
#include "saab/error.hpp"
#include "saab/experiments.hpp"
#include "saab/geometry.hpp"
#include "saab/keyvalue.hpp"
#include "saab/lp.hpp"
#include "saab/normal.hpp"
#include "saab/numeric.hpp"
#include "saab/parallel.hpp"
#include "saab/problems.hpp"
#include "saab/random.hpp"
#include "saab/saa.hpp"
#include "saab/scenario_lp.hpp"
#include "saab/simplex_smooth.hpp"
#include "saab/smd.hpp"
