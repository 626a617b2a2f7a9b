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

#ifndef SPEECHPRINT_ERRORS_H_
#define SPEECHPRINT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace speechprint {

// Base of every error raised by the library. Callers that do not care about
// the category can catch this alone.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SPEECHPRINT_DEFINE_ERROR(Name)   \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  };

SPEECHPRINT_DEFINE_ERROR(DecodeError)
SPEECHPRINT_DEFINE_ERROR(UnsupportedFormat)
SPEECHPRINT_DEFINE_ERROR(RangeError)
SPEECHPRINT_DEFINE_ERROR(ConfigError)
SPEECHPRINT_DEFINE_ERROR(TooShort)
SPEECHPRINT_DEFINE_ERROR(SilentSignal)
SPEECHPRINT_DEFINE_ERROR(DuplicateId)
SPEECHPRINT_DEFINE_ERROR(IncompatibleIndex)
SPEECHPRINT_DEFINE_ERROR(CorruptIndex)
SPEECHPRINT_DEFINE_ERROR(NotFound)
SPEECHPRINT_DEFINE_ERROR(IoError)
SPEECHPRINT_DEFINE_ERROR(ProtocolError)

#undef SPEECHPRINT_DEFINE_ERROR

}  // namespace speechprint

#endif  // SPEECHPRINT_ERRORS_H_
