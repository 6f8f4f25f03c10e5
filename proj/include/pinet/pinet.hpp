// Copyright 2026 The PiNet Authors
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

// Umbrella header for the library (the command line lives in cli.hpp).

#pragma once

#include "pinet/datagen.hpp"
#include "pinet/dataio.hpp"
#include "pinet/error.hpp"
#include "pinet/graph.hpp"
#include "pinet/model.hpp"
#include "pinet/rng.hpp"
#include "pinet/selfcheck.hpp"
#include "pinet/stats.hpp"
#include "pinet/tensor.hpp"
#include "pinet/train.hpp"
