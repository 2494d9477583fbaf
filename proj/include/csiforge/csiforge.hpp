// SPDX-License-Identifier: Apache-2.0
//
// csiforge: deterministic ray-traced MIMO-OFDM channels and spatial CSI learning
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "csiforge/channel.hpp"
#include "csiforge/dataset.hpp"
#include "csiforge/errors.hpp"
#include "csiforge/features.hpp"
#include "csiforge/geometry.hpp"
#include "csiforge/io.hpp"
#include "csiforge/learn/layers.hpp"
#include "csiforge/learn/loss.hpp"
#include "csiforge/learn/model.hpp"
#include "csiforge/learn/optim.hpp"
#include "csiforge/learn/params.hpp"
#include "csiforge/learn/train.hpp"
#include "csiforge/manifest.hpp"
#include "csiforge/raytrace.hpp"
#include "csiforge/report.hpp"
#include "csiforge/rng.hpp"
