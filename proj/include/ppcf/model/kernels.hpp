// Copyright 2026 The ppcf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense kernels shared by the forward and backward passes. Activations are
// stored in the model scalar type T; every reduction accumulates in double.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace ppcf::model::kernels {

inline constexpr double kNormEpsilon = 1e-5;

// y[n, m] = x[n, k] * w[k, m] + b[m]
template <typename T>
void Linear(const T* x, std::size_t n, std::size_t k, const T* w, const T* b,
            std::size_t m, T* y) {
  std::vector<double> acc(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) acc[j] = static_cast<double>(b[j]);
    const T* xr = x + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double xv = static_cast<double>(xr[kk]);
      const T* wr = w + kk * m;
      for (std::size_t j = 0; j < m; ++j) acc[j] += xv * static_cast<double>(wr[j]);
    }
    T* yr = y + i * m;
    for (std::size_t j = 0; j < m; ++j) yr[j] = static_cast<T>(acc[j]);
  }
}

// Given dy[n, m], accumulates dw[k, m], db[m] and writes dx[n, k].
template <typename T>
void LinearBackward(const T* x, std::size_t n, std::size_t k, const T* w, std::size_t m,
                    const double* dy, double* dx, double* dw, double* db) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* dyr = dy + i * m;
    for (std::size_t j = 0; j < m; ++j) db[j] += dyr[j];
    const T* xr = x + i * k;
    double* dxr = dx + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T* wr = w + kk * m;
      double* dwr = dw + kk * m;
      const double xv = static_cast<double>(xr[kk]);
      for (std::size_t j = 0; j < m; ++j) dwr[j] += xv * dyr[j];
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t j = 0; j < m; ++j) s += dyr[j] * static_cast<double>(wr[j]);
      dxr[kk] = s;
    }
  }
}

template <typename T>
void LayerNorm(const T* x, std::size_t n, std::size_t d, const T* gain, const T* bias,
               T* y, double* mean_out, double* rstd_out) {
  for (std::size_t i = 0; i < n; ++i) {
    const T* xr = x + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += static_cast<double>(xr[j]);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = static_cast<double>(xr[j]) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + kNormEpsilon);
    T* yr = y + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double xhat = (static_cast<double>(xr[j]) - mean) * rstd;
      yr[j] = static_cast<T>(xhat * static_cast<double>(gain[j]) + static_cast<double>(bias[j]));
    }
    mean_out[i] = mean;
    rstd_out[i] = rstd;
  }
}

template <typename T>
void LayerNormBackward(const T* x, std::size_t n, std::size_t d, const T* gain,
                       const double* mean, const double* rstd, const double* dy,
                       double* dx, double* dgain, double* dbias) {
  std::vector<double> xhat(d);
  std::vector<double> dxhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    const T* xr = x + i * d;
    const double* dyr = dy + i * d;
    double sum_dxhat = 0.0;
    double sum_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[j] = (static_cast<double>(xr[j]) - mean[i]) * rstd[i];
      dxhat[j] = dyr[j] * static_cast<double>(gain[j]);
      dgain[j] += dyr[j] * xhat[j];
      dbias[j] += dyr[j];
      sum_dxhat += dxhat[j];
      sum_dxhat_xhat += dxhat[j] * xhat[j];
    }
    const double inv_d = 1.0 / static_cast<double>(d);
    double* dxr = dx + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      dxr[j] = rstd[i] * (dxhat[j] - sum_dxhat * inv_d - xhat[j] * sum_dxhat_xhat * inv_d);
    }
  }
}

// Tanh approximation of GELU.
inline double Gelu(double x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

inline double GeluDerivative(double x) {
  constexpr double kC = 0.7978845608028654;
  const double inner = kC * (x + 0.044715 * x * x * x);
  const double t = std::tanh(inner);
  const double dinner = kC * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

// Numerically stable log(sum(exp(v))).
inline double LogSumExp(const double* v, std::size_t n) {
  double mx = v[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, v[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

}  // namespace ppcf::model::kernels
