#include "otta/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace otta::kernels {

namespace {
Backend g_backend =
#ifdef _OPENMP
    Backend::parallel;
#else
    Backend::serial;
#endif
}  // namespace

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

int parallel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
}

void matmul_abt(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
}

void xxt(const double* x, double* s, int c, int t) {
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      double acc = 0.0;
      for (int p = 0; p < t; ++p) acc += x[i * t + p] * x[j * t + p];
      s[i * c + j] = acc;
    }
}

void temporal_conv_forward(const double* x, const double* w, double* y,
                           int B, int C, int T, int F, int L) {
  const int pad = L / 2;
  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f)
      for (int c = 0; c < C; ++c) {
        const double* xr = x + (static_cast<long>(b) * C + c) * T;
        double* yr = y + ((static_cast<long>(b) * F + f) * C + c) * T;
        const double* wf = w + static_cast<long>(f) * L;
        for (int t = 0; t < T; ++t) {
          double acc = 0.0;
          for (int l = 0; l < L; ++l) {
            int src = t + l - pad;
            if (src >= 0 && src < T) acc += wf[l] * xr[src];
          }
          yr[t] = acc;
        }
      }
}

void temporal_conv_backward_input(const double* gy, const double* w, double* gx,
                                  int B, int C, int T, int F, int L) {
  const int pad = L / 2;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      double* gxr = gx + (static_cast<long>(b) * C + c) * T;
      for (int t = 0; t < T; ++t) {
        double acc = 0.0;
        for (int f = 0; f < F; ++f) {
          const double* gyr = gy + ((static_cast<long>(b) * F + f) * C + c) * T;
          const double* wf = w + static_cast<long>(f) * L;
          for (int l = 0; l < L; ++l) {
            int dst = t - l + pad;  // y index that consumed x[t] with tap l
            if (dst >= 0 && dst < T) acc += wf[l] * gyr[dst];
          }
        }
        gxr[t] = acc;
      }
    }
}

void temporal_conv_backward_weight(const double* gy, const double* x, double* gw,
                                   int B, int C, int T, int F, int L) {
  const int pad = L / 2;
  for (int f = 0; f < F; ++f)
    for (int l = 0; l < L; ++l) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          const double* gyr = gy + ((static_cast<long>(b) * F + f) * C + c) * T;
          const double* xr = x + (static_cast<long>(b) * C + c) * T;
          for (int t = 0; t < T; ++t) {
            int src = t + l - pad;
            if (src >= 0 && src < T) acc += gyr[t] * xr[src];
          }
        }
      gw[f * L + l] = acc;
    }
}

void spatial_conv_forward(const double* x, const double* w, double* y,
                          int B, int F, int D, int C, int T) {
  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f)
      for (int d = 0; d < D; ++d) {
        double* yr = y + (static_cast<long>(b) * F * D + f * D + d) * T;
        const double* wd = w + (static_cast<long>(f) * D + d) * C;
        for (int t = 0; t < T; ++t) {
          double acc = 0.0;
          for (int c = 0; c < C; ++c)
            acc += wd[c] * x[((static_cast<long>(b) * F + f) * C + c) * T + t];
          yr[t] = acc;
        }
      }
}

void spatial_conv_backward_input(const double* gy, const double* w, double* gx,
                                 int B, int F, int D, int C, int T) {
  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f)
      for (int c = 0; c < C; ++c) {
        double* gxr = gx + ((static_cast<long>(b) * F + f) * C + c) * T;
        for (int t = 0; t < T; ++t) {
          double acc = 0.0;
          for (int d = 0; d < D; ++d)
            acc += w[(static_cast<long>(f) * D + d) * C + c] *
                   gy[(static_cast<long>(b) * F * D + f * D + d) * T + t];
          gxr[t] = acc;
        }
      }
}

void spatial_conv_backward_weight(const double* gy, const double* x, double* gw,
                                  int B, int F, int D, int C, int T) {
  for (int f = 0; f < F; ++f)
    for (int d = 0; d < D; ++d)
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int b = 0; b < B; ++b) {
          const double* gyr = gy + (static_cast<long>(b) * F * D + f * D + d) * T;
          const double* xr = x + ((static_cast<long>(b) * F + f) * C + c) * T;
          for (int t = 0; t < T; ++t) acc += gyr[t] * xr[t];
        }
        gw[(static_cast<long>(f) * D + d) * C + c] = acc;
      }
}

void linear_forward(const double* x, const double* w, const double* bias, double* y,
                    int B, int K, int N) {
  for (int b = 0; b < B; ++b)
    for (int n = 0; n < N; ++n) {
      double acc = bias ? bias[n] : 0.0;
      for (int k = 0; k < K; ++k) acc += x[static_cast<long>(b) * K + k] * w[static_cast<long>(n) * K + k];
      y[static_cast<long>(b) * N + n] = acc;
    }
}

void linear_backward_input(const double* gy, const double* w, double* gx,
                           int B, int K, int N) {
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k) {
      double acc = 0.0;
      for (int n = 0; n < N; ++n) acc += gy[static_cast<long>(b) * N + n] * w[static_cast<long>(n) * K + k];
      gx[static_cast<long>(b) * K + k] = acc;
    }
}

void linear_backward_weight(const double* gy, const double* x, double* gw, double* gbias,
                            int B, int K, int N) {
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < K; ++k) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b) acc += gy[static_cast<long>(b) * N + n] * x[static_cast<long>(b) * K + k];
      gw[static_cast<long>(n) * K + k] = acc;
    }
    if (gbias) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b) acc += gy[static_cast<long>(b) * N + n];
      gbias[n] = acc;
    }
  }
}

}  // namespace serial

namespace parallel {

// Same loop bodies as the serial reference; threads split only the outer
// independent-output dimensions, so each output element is reduced in the
// exact same order and results are bit-identical.

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
}

void matmul_abt(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
}

void xxt(const double* x, double* s, int c, int t) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      double acc = 0.0;
      for (int p = 0; p < t; ++p) acc += x[i * t + p] * x[j * t + p];
      s[i * c + j] = acc;
    }
}

void temporal_conv_forward(const double* x, const double* w, double* y,
                           int B, int C, int T, int F, int L) {
  const int pad = L / 2;
#pragma omp parallel for collapse(3) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f)
      for (int c = 0; c < C; ++c) {
        const double* xr = x + (static_cast<long>(b) * C + c) * T;
        double* yr = y + ((static_cast<long>(b) * F + f) * C + c) * T;
        const double* wf = w + static_cast<long>(f) * L;
        for (int t = 0; t < T; ++t) {
          double acc = 0.0;
          for (int l = 0; l < L; ++l) {
            int src = t + l - pad;
            if (src >= 0 && src < T) acc += wf[l] * xr[src];
          }
          yr[t] = acc;
        }
      }
}

void temporal_conv_backward_input(const double* gy, const double* w, double* gx,
                                  int B, int C, int T, int F, int L) {
  const int pad = L / 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      double* gxr = gx + (static_cast<long>(b) * C + c) * T;
      for (int t = 0; t < T; ++t) {
        double acc = 0.0;
        for (int f = 0; f < F; ++f) {
          const double* gyr = gy + ((static_cast<long>(b) * F + f) * C + c) * T;
          const double* wf = w + static_cast<long>(f) * L;
          for (int l = 0; l < L; ++l) {
            int dst = t - l + pad;
            if (dst >= 0 && dst < T) acc += wf[l] * gyr[dst];
          }
        }
        gxr[t] = acc;
      }
    }
}

void temporal_conv_backward_weight(const double* gy, const double* x, double* gw,
                                   int B, int C, int T, int F, int L) {
  const int pad = L / 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int f = 0; f < F; ++f)
    for (int l = 0; l < L; ++l) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          const double* gyr = gy + ((static_cast<long>(b) * F + f) * C + c) * T;
          const double* xr = x + (static_cast<long>(b) * C + c) * T;
          for (int t = 0; t < T; ++t) {
            int src = t + l - pad;
            if (src >= 0 && src < T) acc += gyr[t] * xr[src];
          }
        }
      gw[f * L + l] = acc;
    }
}

void spatial_conv_forward(const double* x, const double* w, double* y,
                          int B, int F, int D, int C, int T) {
#pragma omp parallel for collapse(3) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f)
      for (int d = 0; d < D; ++d) {
        double* yr = y + (static_cast<long>(b) * F * D + f * D + d) * T;
        const double* wd = w + (static_cast<long>(f) * D + d) * C;
        for (int t = 0; t < T; ++t) {
          double acc = 0.0;
          for (int c = 0; c < C; ++c)
            acc += wd[c] * x[((static_cast<long>(b) * F + f) * C + c) * T + t];
          yr[t] = acc;
        }
      }
}

void spatial_conv_backward_input(const double* gy, const double* w, double* gx,
                                 int B, int F, int D, int C, int T) {
#pragma omp parallel for collapse(3) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f)
      for (int c = 0; c < C; ++c) {
        double* gxr = gx + ((static_cast<long>(b) * F + f) * C + c) * T;
        for (int t = 0; t < T; ++t) {
          double acc = 0.0;
          for (int d = 0; d < D; ++d)
            acc += w[(static_cast<long>(f) * D + d) * C + c] *
                   gy[(static_cast<long>(b) * F * D + f * D + d) * T + t];
          gxr[t] = acc;
        }
      }
}

void spatial_conv_backward_weight(const double* gy, const double* x, double* gw,
                                  int B, int F, int D, int C, int T) {
#pragma omp parallel for collapse(3) schedule(static)
  for (int f = 0; f < F; ++f)
    for (int d = 0; d < D; ++d)
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int b = 0; b < B; ++b) {
          const double* gyr = gy + (static_cast<long>(b) * F * D + f * D + d) * T;
          const double* xr = x + ((static_cast<long>(b) * F + f) * C + c) * T;
          for (int t = 0; t < T; ++t) acc += gyr[t] * xr[t];
        }
        gw[(static_cast<long>(f) * D + d) * C + c] = acc;
      }
}

void linear_forward(const double* x, const double* w, const double* bias, double* y,
                    int B, int K, int N) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int n = 0; n < N; ++n) {
      double acc = bias ? bias[n] : 0.0;
      for (int k = 0; k < K; ++k) acc += x[static_cast<long>(b) * K + k] * w[static_cast<long>(n) * K + k];
      y[static_cast<long>(b) * N + n] = acc;
    }
}

void linear_backward_input(const double* gy, const double* w, double* gx,
                           int B, int K, int N) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k) {
      double acc = 0.0;
      for (int n = 0; n < N; ++n) acc += gy[static_cast<long>(b) * N + n] * w[static_cast<long>(n) * K + k];
      gx[static_cast<long>(b) * K + k] = acc;
    }
}

void linear_backward_weight(const double* gy, const double* x, double* gw, double* gbias,
                            int B, int K, int N) {
#pragma omp parallel for schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < K; ++k) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b) acc += gy[static_cast<long>(b) * N + n] * x[static_cast<long>(b) * K + k];
      gw[static_cast<long>(n) * K + k] = acc;
    }
    if (gbias) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b) acc += gy[static_cast<long>(b) * N + n];
      gbias[n] = acc;
    }
  }
}

}  // namespace parallel

#define OTTA_DISPATCH(fn, ...)                  \
  do {                                          \
    if (g_backend == Backend::parallel)         \
      parallel::fn(__VA_ARGS__);                \
    else                                        \
      serial::fn(__VA_ARGS__);                  \
  } while (0)

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  OTTA_DISPATCH(matmul, a, b, c, m, k, n);
}
void matmul_abt(const double* a, const double* b, double* c, int m, int k, int n) {
  OTTA_DISPATCH(matmul_abt, a, b, c, m, k, n);
}
void xxt(const double* x, double* s, int c, int t) { OTTA_DISPATCH(xxt, x, s, c, t); }
void temporal_conv_forward(const double* x, const double* w, double* y,
                           int B, int C, int T, int F, int L) {
  OTTA_DISPATCH(temporal_conv_forward, x, w, y, B, C, T, F, L);
}
void temporal_conv_backward_input(const double* gy, const double* w, double* gx,
                                  int B, int C, int T, int F, int L) {
  OTTA_DISPATCH(temporal_conv_backward_input, gy, w, gx, B, C, T, F, L);
}
void temporal_conv_backward_weight(const double* gy, const double* x, double* gw,
                                   int B, int C, int T, int F, int L) {
  OTTA_DISPATCH(temporal_conv_backward_weight, gy, x, gw, B, C, T, F, L);
}
void spatial_conv_forward(const double* x, const double* w, double* y,
                          int B, int F, int D, int C, int T) {
  OTTA_DISPATCH(spatial_conv_forward, x, w, y, B, F, D, C, T);
}
void spatial_conv_backward_input(const double* gy, const double* w, double* gx,
                                 int B, int F, int D, int C, int T) {
  OTTA_DISPATCH(spatial_conv_backward_input, gy, w, gx, B, F, D, C, T);
}
void spatial_conv_backward_weight(const double* gy, const double* x, double* gw,
                                  int B, int F, int D, int C, int T) {
  OTTA_DISPATCH(spatial_conv_backward_weight, gy, x, gw, B, F, D, C, T);
}
void linear_forward(const double* x, const double* w, const double* bias, double* y,
                    int B, int K, int N) {
  OTTA_DISPATCH(linear_forward, x, w, bias, y, B, K, N);
}
void linear_backward_input(const double* gy, const double* w, double* gx,
                           int B, int K, int N) {
  OTTA_DISPATCH(linear_backward_input, gy, w, gx, B, K, N);
}
void linear_backward_weight(const double* gy, const double* x, double* gw, double* gbias,
                            int B, int K, int N) {
  OTTA_DISPATCH(linear_backward_weight, gy, x, gw, gbias, B, K, N);
}

#undef OTTA_DISPATCH

}  // namespace otta::kernels
