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

#include "speechprint/log.h"

#include <atomic>
#include <iostream>
#include <mutex>

namespace speechprint {
namespace {

std::atomic<int> g_level{static_cast<int>(LogLevel::kWarning)};
std::mutex g_mu;

void Emit(const char* tag, std::string_view message) {
  std::lock_guard<std::mutex> lock(g_mu);
  std::clog << "[speechprint] " << tag << ": " << message << '\n';
}

}  // namespace

void SetLogLevel(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel GetLogLevel() { return static_cast<LogLevel>(g_level.load()); }

void LogWarning(std::string_view message) {
  if (g_level >= static_cast<int>(LogLevel::kWarning)) Emit("warning", message);
}

void LogInfo(std::string_view message) {
  if (g_level >= static_cast<int>(LogLevel::kInfo)) Emit("info", message);
}

}  // namespace speechprint
