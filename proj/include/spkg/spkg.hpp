/*
 * Copyright 2026 The spkg Authors.
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
#ifndef SPKG_SPKG_HPP
#define SPKG_SPKG_HPP

// Umbrella header for the library. The command-line layer lives separately
// in spkg/cli.hpp because it pulls in the argument-parsing dependency.

#include "spkg/core.hpp"
#include "spkg/data.hpp"
#include "spkg/evaluation.hpp"
#include "spkg/model.hpp"
#include "spkg/objectives.hpp"
#include "spkg/synthetic.hpp"
#include "spkg/trainer.hpp"

#endif  // SPKG_SPKG_HPP
