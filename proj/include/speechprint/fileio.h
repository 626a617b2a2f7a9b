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


// Whole-file reads and crash-safe whole-file writes.

#ifndef SPEECHPRINT_FILEIO_H_
#define SPEECHPRINT_FILEIO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace speechprint {

// Throw IoError.
std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path);
std::string ReadFileText(const std::filesystem::path& path);

// Writes to "<path>.tmp" and renames over `path`, so readers see either the
// old or the new content. Throws IoError.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::span<const uint8_t> bytes);
void WriteFileAtomic(const std::filesystem::path& path, const std::string& text);

}  // namespace speechprint

#endif  // SPEECHPRINT_FILEIO_H_
