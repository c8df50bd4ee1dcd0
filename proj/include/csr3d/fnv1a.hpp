/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: include/csr3d/fnv1a.hpp
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

#ifndef CSR3D_FNV1A_HPP
#define CSR3D_FNV1A_HPP

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>

namespace csr3d {

/// 64-bit FNV-1a, incremental.
class Fnv1a64
{
public:
    static constexpr std::uint64_t offset_basis = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t prime = 0x100000001b3ULL;

    constexpr void update(std::span<const std::uint8_t> bytes) noexcept
    {
        for (auto b : bytes)
        {
            state_ ^= b;
            state_ *= prime;
        }
    }

    /// Hashes the little-endian byte representation of an integer or double.
    template <typename T>
    constexpr void update_value(T value) noexcept
    {
        std::uint64_t bits = 0;
        if constexpr (sizeof(T) == 8)
        {
            bits = std::bit_cast<std::uint64_t>(value);
        }
        else
        {
            bits = static_cast<std::uint64_t>(value);
        }
        for (std::size_t i = 0; i < sizeof(T); ++i)
        {
            state_ ^= static_cast<std::uint8_t>(bits >> (8 * i));
            state_ *= prime;
        }
    }

    constexpr std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = offset_basis;
};

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept
{
    Fnv1a64 h;
    h.update(bytes);
    return h.digest();
}

} // namespace csr3d

#endif // CSR3D_FNV1A_HPP
