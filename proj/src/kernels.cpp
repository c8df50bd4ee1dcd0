/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: src/kernels.cpp
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

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <string>

namespace csr3d::kernels {

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t) noexcept;
using SsdFn = double (*)(const double*, const double*, std::size_t) noexcept;
using DistFn = void (*)(const double*, const double*, double*, std::size_t) noexcept;

struct Table
{
    DotFn dot;
    SsdFn ssd;
    DistFn dist;
};

constexpr Table scalar_table{&scalar::dot, &scalar::sum_squared_difference, &scalar::vertex_distances};
#if defined(CSR3D_HAVE_AVX2)
constexpr Table avx2_table{&avx2::dot, &avx2::sum_squared_difference, &avx2::vertex_distances};
#endif

std::atomic<Isa>& active()
{
    static std::atomic<Isa> isa{detected_isa()};
    return isa;
}

const Table& table() noexcept
{
#if defined(CSR3D_HAVE_AVX2)
    if (active().load(std::memory_order_relaxed) == Isa::Avx2)
    {
        return avx2_table;
    }
#endif
    return scalar_table;
}

void check_same_size(std::size_t a, std::size_t b, const char* what)
{
    if (a != b)
    {
        throw std::invalid_argument(std::string(what) + ": operand sizes differ (" + std::to_string(a) + " vs " +
                                    std::to_string(b) + ")");
    }
}

// 16 rows of a 137-column stage matrix is ~17 KiB, comfortably inside L1d.
constexpr std::size_t batch_row_block = 16;

} // namespace

std::string_view isa_name(Isa isa) noexcept
{
    switch (isa)
    {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

bool isa_supported(Isa isa) noexcept
{
    switch (isa)
    {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(CSR3D_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

Isa detected_isa() noexcept
{
    return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

Isa active_isa() noexcept
{
    return active().load(std::memory_order_relaxed);
}

void set_active_isa(Isa isa)
{
    if (!isa_supported(isa))
    {
        throw std::invalid_argument("kernel variant '" + std::string(isa_name(isa)) + "' is not supported here");
    }
    active().store(isa, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b)
{
    check_same_size(a.size(), b.size(), "dot");
    return table().dot(a.data(), b.data(), a.size());
}

void gemv_accumulate(std::span<const double> a, std::span<const double> x, std::span<double> y)
{
    const std::size_t cols = x.size();
    check_same_size(a.size(), cols * y.size(), "gemv_accumulate");
    const DotFn fn = table().dot;
    for (std::size_t i = 0; i < y.size(); ++i)
    {
        y[i] += fn(a.data() + i * cols, x.data(), cols);
    }
}

void gemv_accumulate_batch(std::span<const double> a, std::size_t cols, std::span<const double> x,
                           std::span<double> y, std::size_t batch)
{
    if (cols == 0 || batch == 0)
    {
        return;
    }
    const std::size_t rows = a.size() / cols;
    check_same_size(a.size(), rows * cols, "gemv_accumulate_batch");
    check_same_size(x.size(), batch * cols, "gemv_accumulate_batch");
    check_same_size(y.size(), batch * rows, "gemv_accumulate_batch");
    const DotFn fn = table().dot;
    for (std::size_t r0 = 0; r0 < rows; r0 += batch_row_block)
    {
        const std::size_t r1 = std::min(rows, r0 + batch_row_block);
        for (std::size_t b = 0; b < batch; ++b)
        {
            const double* xb = x.data() + b * cols;
            double* yb = y.data() + b * rows;
            for (std::size_t i = r0; i < r1; ++i)
            {
                yb[i] += fn(a.data() + i * cols, xb, cols);
            }
        }
    }
}

double sum_squared_difference(std::span<const double> a, std::span<const double> b)
{
    check_same_size(a.size(), b.size(), "sum_squared_difference");
    return table().ssd(a.data(), b.data(), a.size());
}

void vertex_distances(std::span<const double> a, std::span<const double> b, std::span<double> out)
{
    check_same_size(a.size(), b.size(), "vertex_distances");
    check_same_size(a.size(), 3 * out.size(), "vertex_distances");
    table().dist(a.data(), b.data(), out.data(), out.size());
}

} // namespace csr3d::kernels
