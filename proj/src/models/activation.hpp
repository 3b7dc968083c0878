#pragma once

#include <cmath>

#include "mupre/models.hpp"

namespace mupre::detail {

inline double act(Activation a, double z) {
  switch (a) {
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::identity: return z;
  }
  return z;
}

inline double act_grad(Activation a, double z) {
  switch (a) {
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

inline Matrix apply(Activation a, Matrix m) {
  for (double& v : m.values()) v = act(a, v);
  return m;
}

// g ⊙ φ'(h), scaled by s
inline Matrix backprop_act(Activation a, const Matrix& g, const Matrix& h, double s = 1.0) {
  Matrix out(g.rows(), g.cols());
  for (std::size_t k = 0; k < g.size(); ++k) out.data()[k] = s * g.data()[k] * act_grad(a, h.data()[k]);
  return out;
}

// ½·mean (f - y)² and its gradient (f - y)/B.
inline double mse(const Matrix& f, const Matrix& y, Matrix* grad) {
  if (!f.same_shape(y)) throw DimensionError("prediction/target shape mismatch");
  const double b = static_cast<double>(f.cols());
  double loss = 0.0;
  if (grad) *grad = Matrix(f.rows(), f.cols());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double r = f.data()[k] - y.data()[k];
    loss += 0.5 * r * r;
    if (grad) grad->data()[k] = r / b;
  }
  return loss / b;
}

}  // namespace mupre::detail
