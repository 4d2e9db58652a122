// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Eigen must precede httplib: <resolv.h> defines a _res macro.
#include <Eigen/Core>
#include <httplib.h>
