// Copyright 2026 The Speechprint Authors. All Rights Reserved.
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

#ifndef SPEECHPRINT_LOG_H_
#define SPEECHPRINT_LOG_H_

#include <string_view>

namespace speechprint {

enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2 };

void SetLogLevel(LogLevel level);
LogLevel GetLogLevel();

// Writes one line to stderr when the level permits. Thread-safe.
void LogWarning(std::string_view message);
void LogInfo(std::string_view message);

}  // namespace speechprint

#endif  // SPEECHPRINT_LOG_H_
