// Copyright (C) 2026 The viewforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/action_text.hpp"
#include "viewforge/box.hpp"
#include "viewforge/dataset.hpp"
#include "viewforge/geometry.hpp"
#include "viewforge/parsers.hpp"
#include "viewforge/pipeline.hpp"
#include "viewforge/reward.hpp"
#include "viewforge/scene.hpp"
#include "viewforge/service.hpp"
#include "viewforge/task.hpp"
#include "viewforge/task_forge.hpp"
#include "viewforge/trajectory.hpp"
