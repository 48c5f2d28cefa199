// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace elastic {

enum class Errc {
  invalid_argument,
  shape_mismatch,
  out_of_range,
  io,
};

/// Single exception type thrown by the library. The code maps 1:1 onto the
/// status values of the C API.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace elastic
