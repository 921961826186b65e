#pragma once

#include <string>

#include "pkm/matrix.hpp"

namespace pkm {

/// A named view of one trainable tensor and its gradient buffer.
template <typename T>
struct ParamRef {
  std::string name;
  Matrix<T>* value;
  Matrix<T>* grad;
};

/// Non-trainable state that still persists (e.g. BN running stats).
template <typename T>
struct BufferRef {
  std::string name;
  Matrix<T>* value;
};

}  // namespace pkm
