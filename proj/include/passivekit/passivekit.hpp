// Copyright 2026 The passivekit Authors. All Rights Reserved.
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

#ifndef PASSIVEKIT_PASSIVEKIT_HPP_
#define PASSIVEKIT_PASSIVEKIT_HPP_

#include "passivekit/analysis.hpp"
#include "passivekit/corpus.hpp"
#include "passivekit/intervention.hpp"
#include "passivekit/ngram.hpp"
#include "passivekit/scoring.hpp"
#include "passivekit/stats.hpp"
#include "passivekit/stimuli.hpp"
#include "passivekit/voice.hpp"

#endif  // PASSIVEKIT_PASSIVEKIT_HPP_
