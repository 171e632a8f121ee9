// Copyright 2026 The refuge-eval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "refuge/bmp.hpp"
#include "refuge/cli.hpp"
#include "refuge/cls_metrics.hpp"
#include "refuge/ensemble.hpp"
#include "refuge/errors.hpp"
#include "refuge/mask.hpp"
#include "refuge/ranking.hpp"
#include "refuge/rng.hpp"
#include "refuge/seg_metrics.hpp"
#include "refuge/stats.hpp"
#include "refuge/synth.hpp"
