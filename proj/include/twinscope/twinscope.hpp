/*
 * Copyright 2026 The TwinScope Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Umbrella header for the library (everything except the HTTP service).

#include "twinscope/dataset.hpp"
#include "twinscope/error.hpp"
#include "twinscope/explain.hpp"
#include "twinscope/features.hpp"
#include "twinscope/forest.hpp"
#include "twinscope/ilpd_io.hpp"
#include "twinscope/logistic.hpp"
#include "twinscope/metrics.hpp"
#include "twinscope/model_io.hpp"
#include "twinscope/predictor.hpp"
#include "twinscope/random.hpp"
#include "twinscope/reconcile.hpp"
#include "twinscope/report.hpp"
#include "twinscope/rulelang.hpp"
#include "twinscope/synth.hpp"
#include "twinscope/timestamp.hpp"
#include "twinscope/twin_store.hpp"
#include "twinscope/wire.hpp"
