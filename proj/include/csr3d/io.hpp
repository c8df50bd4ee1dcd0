/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: include/csr3d/io.hpp
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

#ifndef CSR3D_IO_HPP
#define CSR3D_IO_HPP

#include "csr3d/cascade.hpp"
#include "csr3d/geometry.hpp"
#include "csr3d/metrics.hpp"
#include "csr3d/synthdata.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace csr3d {

inline constexpr std::array<char, 8> model_magic{'C', 'S', 'R', '3', 'D', '0', '1', '\0'};
inline constexpr std::uint16_t model_format_version = 1;
inline constexpr std::size_t model_header_size = 22;

/// Flag bits of the model header.
enum ModelFlags : std::uint16_t {
    model_has_extras = 1u << 0,   ///< fingerprint and mean landmarks
    model_has_topology = 1u << 1, ///< triangle list
    model_has_normals = 1u << 2,  ///< landmark normals
};

/**
 * The model file, little-endian throughout:
 *
 *   header   magic[8] "CSR3D01\0", version u16, n u32, l u32, K u16, flags u16
 *   payload  camera scale f64, landmark indices l x u32, regions l x u8,
 *            mean shape 3n x f64, K stage matrices 3n x (2l+1) x f64 row-major,
 *            [extras: fingerprint u64, mean landmarks 2l x f64, visibility l x u8]
 *            [normals: l x 3 x f64] [topology: count u32, count x 3 x u32]
 *   trailer  FNV-1a 64 of the payload, u64
 */
std::vector<std::uint8_t> encode_model(const CascadeModel& model);

/// Throws FormatError with the failure mode: BadMagic, VersionMismatch, Truncated, LengthMismatch,
/// ChecksumMismatch or InvalidContent.
CascadeModel decode_model(std::span<const std::uint8_t> bytes);

void save_model(const CascadeModel& model, const std::filesystem::path& path);
CascadeModel load_model(const std::filesystem::path& path);

inline constexpr std::string_view dataset_manifest_name = "manifest.json";
inline constexpr std::string_view dataset_records_name = "records.bin";

/// Bytes per record for n vertices and l landmarks.
std::size_t dataset_record_stride(std::size_t n, std::size_t l) noexcept;

/**
 * Writes manifest.json and records.bin into dir, creating it if needed.
 * Records: subject u32, yaw f64, pitch f64, frontal-neutral u8, shape 3n x f64,
 * landmarks 2l x f64, visibility l x u8.
 */
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/**
 * Reads a dataset directory back. Topology is rebuilt from the recorded
 * provenance. Visible landmarks lying exactly at (0, 0) are legal and
 * reported through warnings.
 */
Dataset load_dataset(const std::filesystem::path& dir, std::vector<std::string>* warnings = nullptr);

/// "v x y z" lines with 9 significant digits, then 1-based "f i j k" lines.
std::string obj_text(const Shape3D& shape, const MeshTopology& topology);
void export_obj(const Shape3D& shape, const MeshTopology& topology, const std::filesystem::path& path);

/**
 * Rows "index,u,v,visible" covering 0..l-1 in any order; an optional
 * "index,u,v,visible" header and blank lines are skipped. With y_down the v
 * axis is negated.
 */
LandmarkSet2D parse_landmarks_csv(std::string_view text, std::size_t landmark_count, bool y_down);
LandmarkSet2D import_landmarks(const std::filesystem::path& path, std::size_t landmark_count, bool y_down);

std::string landmarks_csv(const LandmarkSet2D& landmarks, bool y_down = false);

/// Header "axis_value,metric,value,std", then one row per grid point and series.
std::string report_csv(const AblationResult& result);

/// Per-vertex error map, header "vertex,error".
std::string error_map_csv(const ErrorMap& map);

/// Writes to a sibling temporary file and renames it over path.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

} // namespace csr3d

#endif // CSR3D_IO_HPP
