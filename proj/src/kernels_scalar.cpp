/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: src/kernels_scalar.cpp
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
#include "csr3d/kernels.hpp"

#include <cmath>

namespace csr3d::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) noexcept
{
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        sum += a[i] * b[i];
    }
    return sum;
}

double sum_squared_difference(const double* a, const double* b, std::size_t n) noexcept
{
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void vertex_distances(const double* a, const double* b, double* out, std::size_t vertices) noexcept
{
    for (std::size_t j = 0; j < vertices; ++j)
    {
        const double dx = a[3 * j] - b[3 * j];
        const double dy = a[3 * j + 1] - b[3 * j + 1];
        const double dz = a[3 * j + 2] - b[3 * j + 2];
        out[j] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
}

} // namespace csr3d::kernels::scalar
