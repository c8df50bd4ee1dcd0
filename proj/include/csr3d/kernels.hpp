/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: include/csr3d/kernels.hpp
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
#pragma once

#ifndef CSR3D_KERNELS_HPP
#define CSR3D_KERNELS_HPP

#include <cstddef>
#include <span>
#include <string_view>

/**
 * Inner loops of inference and evaluation. Each kernel has a portable
 * scalar reference and an AVX2+FMA variant; the variant is picked once at
 * startup from the CPU's feature bits and can be overridden for testing.
 *
 * Within one process the choice is fixed, so results are reproducible run
 * to run. Across variants they agree to rounding, not bit for bit.
 */
namespace csr3d::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// True if this build contains the variant and the CPU can run it.
bool isa_supported(Isa isa) noexcept;

/// The best supported variant.
Isa detected_isa() noexcept;

Isa active_isa() noexcept;

/// Throws std::invalid_argument if isa is not supported.
void set_active_isa(Isa isa);

/// Restores the active variant on scope exit.
class ScopedIsa
{
public:
    explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_active_isa(isa); }
    ~ScopedIsa() { set_active_isa(previous_); }
    ScopedIsa(const ScopedIsa&) = delete;
    ScopedIsa& operator=(const ScopedIsa&) = delete;

private:
    Isa previous_;
};

double dot(std::span<const double> a, std::span<const double> b);

/**
 * y[i] += dot(row i of a, x) for a row-major rows x x.size() matrix.
 * Every y[i] is produced by exactly one dot() call, so a row's result does
 * not depend on which other rows are computed alongside it.
 */
void gemv_accumulate(std::span<const double> a, std::span<const double> x, std::span<double> y);

/**
 * The same product for a batch: y_b[i] += dot(row i of a, x_b), with x and y
 * holding the batch members back to back. Rows are visited in cache-sized
 * blocks so the matrix is streamed from memory once per batch, and each
 * output is bit-identical to gemv_accumulate on that member alone.
 */
void gemv_accumulate_batch(std::span<const double> a, std::size_t cols, std::span<const double> x,
                           std::span<double> y, std::size_t batch);

/// sum_i (a[i] - b[i])^2
double sum_squared_difference(std::span<const double> a, std::span<const double> b);

/// out[j] = |a_j - b_j| for interleaved xyz triples; out.size() == a.size() / 3.
void vertex_distances(std::span<const double> a, std::span<const double> b, std::span<double> out);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n) noexcept;
double sum_squared_difference(const double* a, const double* b, std::size_t n) noexcept;
void vertex_distances(const double* a, const double* b, double* out, std::size_t vertices) noexcept;
} // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n) noexcept;
double sum_squared_difference(const double* a, const double* b, std::size_t n) noexcept;
void vertex_distances(const double* a, const double* b, double* out, std::size_t vertices) noexcept;
} // namespace avx2

} // namespace csr3d::kernels

#endif // CSR3D_KERNELS_HPP
