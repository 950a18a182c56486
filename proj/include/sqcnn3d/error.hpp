// Copyright 2026 The sqcnn3d Authors

// Licensed under the Apache License, Version 2.0 (the License);
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

// http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an AS IS BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <stdexcept>
#include <string>

namespace sqcnn3d {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define SQCNN3D_DEFINE_ERROR(Name)                                            \
    class Name : public Error {                                                \
      public:                                                                  \
        using Error::Error;                                                    \
    }

SQCNN3D_DEFINE_ERROR(InvalidQubitError);
SQCNN3D_DEFINE_ERROR(ShapeError);
SQCNN3D_DEFINE_ERROR(LayoutError);
SQCNN3D_DEFINE_ERROR(UnsupportedGradientError);
SQCNN3D_DEFINE_ERROR(EmptyInputError);
SQCNN3D_DEFINE_ERROR(DegenerateBoundsError);
SQCNN3D_DEFINE_ERROR(InsufficientFiltersError);
SQCNN3D_DEFINE_ERROR(DegenerateMeshError);
SQCNN3D_DEFINE_ERROR(ConfigError);
SQCNN3D_DEFINE_ERROR(IoError);

#undef SQCNN3D_DEFINE_ERROR

/// Malformed input text. Carries the 1-based line where parsing stopped.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

} // namespace sqcnn3d
