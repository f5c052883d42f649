#pragma once

// Hot numeric loops, each in two variants: a plain serial reference and an
// OpenMP version. Both produce bit-identical results because parallelism is
// only ever applied across independent output elements; no reduction is ever
// split between threads. The dispatchers at the bottom route through the
// process-wide backend selection.

namespace otta::kernels {

enum class Backend { serial, parallel };

Backend backend();
void set_backend(Backend b);

/// Number of threads the parallel backend would use (1 when built without OpenMP).
int parallel_threads();

namespace serial {

// c[m,n] = a[m,k] * b[k,n]
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

// c[m,n] = a[m,k] * b[n,k]^T
void matmul_abt(const double* a, const double* b, double* c, int m, int k, int n);

// s[c,c] = x[c,t] * x[c,t]^T
void xxt(const double* x, double* s, int c, int t);

// x[B,C,T], w[F,L] -> y[B,F,C,T]; zero padding, pad = L/2
void temporal_conv_forward(const double* x, const double* w, double* y,
                           int B, int C, int T, int F, int L);
void temporal_conv_backward_input(const double* gy, const double* w, double* gx,
                                  int B, int C, int T, int F, int L);
void temporal_conv_backward_weight(const double* gy, const double* x, double* gw,
                                   int B, int C, int T, int F, int L);

// x[B,F,C,T], w[F,D,C] -> y[B,F*D,T]
void spatial_conv_forward(const double* x, const double* w, double* y,
                          int B, int F, int D, int C, int T);
void spatial_conv_backward_input(const double* gy, const double* w, double* gx,
                                 int B, int F, int D, int C, int T);
void spatial_conv_backward_weight(const double* gy, const double* x, double* gw,
                                  int B, int F, int D, int C, int T);

// x[B,K], w[N,K], bias[N] (nullable) -> y[B,N]
void linear_forward(const double* x, const double* w, const double* bias, double* y,
                    int B, int K, int N);
void linear_backward_input(const double* gy, const double* w, double* gx,
                           int B, int K, int N);
void linear_backward_weight(const double* gy, const double* x, double* gw, double* gbias,
                            int B, int K, int N);

}  // namespace serial

namespace parallel {

void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_abt(const double* a, const double* b, double* c, int m, int k, int n);
void xxt(const double* x, double* s, int c, int t);
void temporal_conv_forward(const double* x, const double* w, double* y,
                           int B, int C, int T, int F, int L);
void temporal_conv_backward_input(const double* gy, const double* w, double* gx,
                                  int B, int C, int T, int F, int L);
void temporal_conv_backward_weight(const double* gy, const double* x, double* gw,
                                   int B, int C, int T, int F, int L);
void spatial_conv_forward(const double* x, const double* w, double* y,
                          int B, int F, int D, int C, int T);
void spatial_conv_backward_input(const double* gy, const double* w, double* gx,
                                 int B, int F, int D, int C, int T);
void spatial_conv_backward_weight(const double* gy, const double* x, double* gw,
                                  int B, int F, int D, int C, int T);
void linear_forward(const double* x, const double* w, const double* bias, double* y,
                    int B, int K, int N);
void linear_backward_input(const double* gy, const double* w, double* gx,
                           int B, int K, int N);
void linear_backward_weight(const double* gy, const double* x, double* gw, double* gbias,
                            int B, int K, int N);

}  // namespace parallel

// Dispatchers honoring set_backend().
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_abt(const double* a, const double* b, double* c, int m, int k, int n);
void xxt(const double* x, double* s, int c, int t);
void temporal_conv_forward(const double* x, const double* w, double* y,
                           int B, int C, int T, int F, int L);
void temporal_conv_backward_input(const double* gy, const double* w, double* gx,
                                  int B, int C, int T, int F, int L);
void temporal_conv_backward_weight(const double* gy, const double* x, double* gw,
                                   int B, int C, int T, int F, int L);
void spatial_conv_forward(const double* x, const double* w, double* y,
                          int B, int F, int D, int C, int T);
void spatial_conv_backward_input(const double* gy, const double* w, double* gx,
                                 int B, int F, int D, int C, int T);
void spatial_conv_backward_weight(const double* gy, const double* x, double* gw,
                                  int B, int F, int D, int C, int T);
void linear_forward(const double* x, const double* w, const double* bias, double* y,
                    int B, int K, int N);
void linear_backward_input(const double* gy, const double* w, double* gx,
                           int B, int K, int N);
void linear_backward_weight(const double* gy, const double* x, double* gw, double* gbias,
                            int B, int K, int N);

}  // namespace otta::kernels
