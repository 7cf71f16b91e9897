/**
 * Copyright 2026 The lidar_edge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIDAR_EDGE_ERROR_HPP_
#define LIDAR_EDGE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace lidar_edge {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or raster sizes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument outside its legal domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure. The message always carries the offending path.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Malformed file content (PGM, LRI1, manifest lines).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration document or key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Model file load failures; each failure mode has its own type.
class ModelFormatError : public FormatError {
 public:
  using FormatError::FormatError;
};
class BadMagicError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};
class VersionMismatchError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};
class TruncatedFileError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};
class ChecksumError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_ERROR_HPP_
