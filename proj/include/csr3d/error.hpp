/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: include/csr3d/error.hpp
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

#ifndef CSR3D_ERROR_HPP
#define CSR3D_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace csr3d {

/**
 * Coarse classification of every error the library raises. The CLI maps
 * these onto its exit codes (1 = validation, 2 = numerical, 3 = I/O).
 */
enum class ErrorCategory { Validation, Numerical, Io };

class Error : public std::runtime_error
{
public:
    Error(ErrorCategory category, const std::string& what) : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

/// Mismatched dimensions, out-of-range indices, malformed containers.
class StructuralError : public Error
{
public:
    explicit StructuralError(const std::string& what) : Error(ErrorCategory::Validation, what) {}
};

/// Non-finite values or violated value-level preconditions.
class ValidationError : public Error
{
public:
    explicit ValidationError(const std::string& what) : Error(ErrorCategory::Validation, what) {}
};

class DegenerateGeometryError : public Error
{
public:
    explicit DegenerateGeometryError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

/**
 * Raised by the stage solver when the landmark Gram matrix cannot be
 * inverted. dimensions() lists the offending rows of the augmented
 * deviation vector (2*i = u of landmark i, 2*i+1 = v, 2*l = bias).
 */
class RankDeficiencyError : public Error
{
public:
    RankDeficiencyError(const std::string& what, std::vector<std::size_t> dimensions)
        : Error(ErrorCategory::Numerical, what), dimensions_(std::move(dimensions))
    {
    }

    const std::vector<std::size_t>& dimensions() const noexcept { return dimensions_; }

private:
    std::vector<std::size_t> dimensions_;
};

class InitializationError : public Error
{
public:
    explicit InitializationError(const std::string& what) : Error(ErrorCategory::Validation, what) {}
};

class GenerationError : public Error
{
public:
    explicit GenerationError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

class IoError : public Error
{
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

/// Distinct failure modes when decoding a model or dataset file.
enum class FormatFailure { BadMagic, VersionMismatch, ChecksumMismatch, Truncated, LengthMismatch, InvalidContent };

class FormatError : public Error
{
public:
    FormatError(FormatFailure failure, const std::string& what) : Error(ErrorCategory::Io, what), failure_(failure) {}

    FormatFailure failure() const noexcept { return failure_; }

private:
    FormatFailure failure_;
};

/// Text input that does not parse. line() is 1-based, 0 when not line-specific.
class ParseError : public Error
{
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(ErrorCategory::Validation, what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace csr3d

#endif // CSR3D_ERROR_HPP
