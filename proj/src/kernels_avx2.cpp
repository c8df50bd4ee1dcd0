/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: src/kernels_avx2.cpp
 *
 * Copyright 2026 The csr3d Authors
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
// Built with -mavx2 -mfma; only reached through the dispatcher after a CPU check.
#include "csr3d/kernels.hpp"

#if defined(CSR3D_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace csr3d::kernels::avx2 {

namespace {

inline double horizontal_sum(__m256d v) noexcept
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

} // namespace

double dot(const double* a, const double* b, std::size_t n) noexcept
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16)
    {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4)
    {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double sum = horizontal_sum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i)
    {
        sum = std::fma(a[i], b[i], sum);
    }
    return sum;
}

double sum_squared_difference(const double* a, const double* b, std::size_t n) noexcept
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
    {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
    {
        const double d = a[i] - b[i];
        sum = std::fma(d, d, sum);
    }
    return sum;
}

void vertex_distances(const double* a, const double* b, double* out, std::size_t vertices) noexcept
{
    // Four vertices per step: gather x, y and z lanes out of the 12 interleaved doubles.
    const __m256i x_idx = _mm256_setr_epi64x(0, 3, 6, 9);
    const __m256i y_idx = _mm256_setr_epi64x(1, 4, 7, 10);
    const __m256i z_idx = _mm256_setr_epi64x(2, 5, 8, 11);
    std::size_t j = 0;
    for (; j + 4 <= vertices; j += 4)
    {
        const double* pa = a + 3 * j;
        const double* pb = b + 3 * j;
        const __m256d dx = _mm256_sub_pd(_mm256_i64gather_pd(pa, x_idx, 8), _mm256_i64gather_pd(pb, x_idx, 8));
        const __m256d dy = _mm256_sub_pd(_mm256_i64gather_pd(pa, y_idx, 8), _mm256_i64gather_pd(pb, y_idx, 8));
        const __m256d dz = _mm256_sub_pd(_mm256_i64gather_pd(pa, z_idx, 8), _mm256_i64gather_pd(pb, z_idx, 8));
        __m256d sq = _mm256_mul_pd(dx, dx);
        sq = _mm256_fmadd_pd(dy, dy, sq);
        sq = _mm256_fmadd_pd(dz, dz, sq);
        _mm256_storeu_pd(out + j, _mm256_sqrt_pd(sq));
    }
    for (; j < vertices; ++j)
    {
        const double dx = a[3 * j] - b[3 * j];
        const double dy = a[3 * j + 1] - b[3 * j + 1];
        const double dz = a[3 * j + 2] - b[3 * j + 2];
        out[j] = std::sqrt(std::fma(dz, dz, std::fma(dy, dy, dx * dx)));
    }
}

} // namespace csr3d::kernels::avx2

#endif // CSR3D_HAVE_AVX2
