/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: include/csr3d/synthdata.hpp
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

#ifndef CSR3D_SYNTHDATA_HPP
#define CSR3D_SYNTHDATA_HPP

#include "csr3d/geometry.hpp"

#include "Eigen/Core"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace csr3d {

/**
 * Parameters of the synthetic statistical shape model. The model is a
 * deterministic function of these four numbers, which is what a dataset
 * manifest records as its provenance.
 */
struct ShapeModelConfig
{
    std::size_t n_vertices = 1500; ///< target; the tessellation picks the closest reachable count
    std::size_t identity_rank = 10;
    std::size_t expression_rank = 6;
    std::uint64_t seed = 0;
};

/**
 * A half-ellipsoid "head" facing +z, with a 68-point landmark layout drawn on
 * its front, plus orthonormal identity and expression displacement bases.
 *
 * Bases are stored as columns in the flattened (x1, y1, z1, ...) space and
 * have zero mean translation, so centring a sample does not disturb them.
 */
struct ShapeModel
{
    ShapeModelConfig config;
    Shape3D neutral_mean;
    Eigen::MatrixXd identity_basis;   ///< 3n x r_id
    Eigen::MatrixXd expression_basis; ///< 3n x r_ex
    Eigen::VectorXd identity_scales;  ///< per-direction standard deviation
    Eigen::VectorXd expression_scales;
    MeshTopology topology;
    LandmarkSpec landmark_spec;

    std::size_t vertex_count() const noexcept { return neutral_mean.size(); }

    /// Distance between the two eye-contour centroids of the neutral mean, in mm.
    double inter_eye_distance() const;
};

/// Landmark positions (into the 68-point layout) of the two eye contours.
inline constexpr std::array<std::size_t, 6> left_eye_landmarks{36, 37, 38, 39, 40, 41};
inline constexpr std::array<std::size_t, 6> right_eye_landmarks{42, 43, 44, 45, 46, 47};

/// Throws GenerationError if the bases cannot be orthonormalised or the mesh is too coarse for 68 landmarks.
ShapeModel build_shape_model(const ShapeModelConfig& config);

/// Projected inter-eye distance the default camera is calibrated to, in image units.
inline constexpr double target_image_inter_eye_distance = 220.0;

/// Camera scale mapping the model's inter-eye distance onto target_image_inter_eye_distance.
double default_camera_scale(const ShapeModel& model);

struct SampleSpec
{
    Eigen::VectorXd identity_coeffs;
    Eigen::VectorXd expression_coeffs;
    double yaw = 0.0;   ///< degrees
    double pitch = 0.0; ///< degrees
    bool is_frontal_neutral = false;
};

/// R(yaw, pitch) * (neutral + identity + expression), re-centred at the origin.
Shape3D sample_shape(const ShapeModel& model, const SampleSpec& spec);

struct Sample
{
    std::uint32_t subject = 0;
    double yaw = 0.0;
    double pitch = 0.0;
    bool frontal_neutral = false;
    Shape3D shape;           ///< posed, expressive ground truth
    LandmarkSet2D landmarks; ///< projected, zero-filled where self-occluded
};

/**
 * Training or test samples sharing one vertex layout and landmark spec.
 * topology is empty for datasets restricted to a vertex subset.
 */
struct Dataset
{
    std::vector<Sample> samples;
    LandmarkSpec landmark_spec;
    MeshTopology topology;
    double camera_scale = 1.0; ///< scale used at generation time
    std::uint64_t seed = 0;
    std::optional<ShapeModelConfig> provenance;

    std::size_t size() const noexcept { return samples.size(); }
    std::size_t vertex_count() const noexcept { return samples.empty() ? 0 : samples.front().shape.size(); }
    std::size_t landmark_count() const noexcept { return landmark_spec.size(); }

    /// Shared n and l, valid landmark spec and topology. Throws StructuralError.
    void validate() const;
};

struct DatasetConfig
{
    std::size_t subjects = 40;
    std::size_t expressions_per_subject = 5; ///< expression 0 is always neutral
    std::vector<double> yaw_grid{-60.0, -30.0, 0.0, 30.0, 60.0};
    std::vector<double> pitch_grid{-15.0, 0.0, 15.0};
    std::optional<double> camera_scale; ///< default_camera_scale(model) when unset
    std::uint64_t seed = 0;

    std::size_t sample_count() const noexcept
    {
        return subjects * expressions_per_subject * yaw_grid.size() * pitch_grid.size();
    }
};

/// 40 subjects x 5 expressions x (5 yaw x 3 pitch) = 3,000 samples.
DatasetConfig desk_scale_config(std::uint64_t seed = 0);

/// 200 subjects x 1 expression x (11 yaw x 5 pitch) = 11,000 samples.
DatasetConfig paper_scale_config(std::uint64_t seed = 0);

/**
 * One sample per subject x expression x yaw x pitch, in that nesting order.
 * Each subject's randomness comes from its own stream seeded by
 * (seed, subject, expression), independent of generation order.
 */
Dataset generate_dataset(const ShapeModel& model, const DatasetConfig& config);

/// Splits by subject so no subject lands on both sides. Deterministic in seed.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

/// The same samples with only the listed vertices; every landmark vertex must be listed.
Dataset restrict_vertices(const Dataset& dataset, std::span<const std::uint32_t> vertices);

/// The same samples with only the landmarks at the given spec positions.
Dataset restrict_landmarks(const Dataset& dataset, std::span<const std::size_t> positions);

/// Mean distance between eye-contour centroids over the frontal-neutral samples, in image units.
double image_inter_eye_distance(const Dataset& dataset);

} // namespace csr3d

#endif // CSR3D_SYNTHDATA_HPP
