// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raxelkit/dsca.hpp"
#include "raxelkit/error.hpp"
#include "raxelkit/evalkit.hpp"
#include "raxelkit/flowmatch.hpp"
#include "raxelkit/geom.hpp"
#include "raxelkit/io.hpp"
#include "raxelkit/ray_decode.hpp"
#include "raxelkit/ray_encode.hpp"
#include "raxelkit/registration.hpp"
