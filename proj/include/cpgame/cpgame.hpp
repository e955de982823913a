// Copyright 2026 The cpgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CPGAME_CPGAME_HPP_
#define CPGAME_CPGAME_HPP_

#include "cpgame/benchmark.hpp"
#include "cpgame/closed_form.hpp"
#include "cpgame/dynamics.hpp"
#include "cpgame/experiments.hpp"
#include "cpgame/game_core.hpp"
#include "cpgame/io.hpp"

#endif  // CPGAME_CPGAME_HPP_
