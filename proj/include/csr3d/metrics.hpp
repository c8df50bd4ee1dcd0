/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: include/csr3d/metrics.hpp
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

#ifndef CSR3D_METRICS_HPP
#define CSR3D_METRICS_HPP

#include "csr3d/cascade.hpp"
#include "csr3d/geometry.hpp"
#include "csr3d/synthdata.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace csr3d {

/**
 * Per-vertex errors with their mean and (population) standard deviation.
 */
struct ErrorMap
{
    std::vector<double> per_vertex;
    double mean = 0.0;
    double std = 0.0;

    /// Computes the summary. Throws ValidationError on negative or non-finite entries.
    static ErrorMap from_values(std::vector<double> values);
};

struct MetricValue
{
    double value = 0.0;
    ErrorMap map;
};

enum class MaeNorm {
    PerVertex, ///< mean of per-vertex Euclidean distances
    Frobenius  ///< |S* - S| (Frobenius) divided by n
};

/**
 * Mean absolute 3D error in the units of the shapes. With align set, the
 * reconstruction is first brought onto the ground truth by a similarity
 * Procrustes fit.
 */
MetricValue mae(const Shape3D& ground_truth, const Shape3D& reconstructed, bool align,
                MaeNorm norm = MaeNorm::PerVertex);

/// Normalized per-vertex depth error. Throws DegenerateGeometryError on a flat ground truth.
MetricValue npde(const Shape3D& ground_truth, const Shape3D& reconstructed);

struct Summary
{
    double mean = 0.0;
    double std = 0.0;
};

Summary summarize(std::span<const double> values);

/// MAE of every pair, then mean and standard deviation over the pairs.
Summary batch_mae(std::span<const Shape3D> ground_truth, std::span<const Shape3D> reconstructed, bool align);

/// Disjoint vertex sets, one per Region, covering 0..n-1.
struct RegionPartition
{
    std::array<std::vector<std::uint32_t>, 4> members; ///< indexed by Region, sorted

    const std::vector<std::uint32_t>& of(Region region) const { return members[static_cast<std::size_t>(region)]; }
    std::size_t vertex_count() const noexcept;

    /// Throws StructuralError on a gap, an overlap or an out-of-range index.
    void validate(std::size_t n) const;
};

/**
 * Each vertex takes the region of its nearest landmark on the reference
 * shape. Vertices farther than max_distance from every landmark, and those
 * nearest a landmark labelled Other, go to Other.
 */
RegionPartition region_partition(const Shape3D& reference, const LandmarkSpec& spec, double max_distance = 20.0);

struct RegionMae
{
    std::array<double, 4> value{}; ///< indexed by Region; 0 for an empty region
    std::array<std::size_t, 4> count{};
};

/// Per-region means of one error map. Alignment, if any, is over the whole shape.
RegionMae region_mae(const Shape3D& ground_truth, const Shape3D& reconstructed, const RegionPartition& partition,
                     bool align);

enum class AblationAxis { LandmarkCount, VertexCoverage, VertexDensity, StageIndex, NoiseMode };

std::string_view axis_name(AblationAxis axis) noexcept;

struct AblationSeries
{
    std::string metric;
    std::vector<double> values; ///< one per grid point
    std::vector<double> stds;   ///< one per grid point; 0 where not applicable
};

/**
 * One experiment sweep. Each series holds a metric evaluated at every grid
 * point.
 */
struct AblationResult
{
    AblationAxis axis = AblationAxis::LandmarkCount;
    std::vector<double> grid;
    std::vector<AblationSeries> series;

    const AblationSeries& at(std::string_view metric) const;

    /// Grid strictly increasing and every series the length of the grid. Throws StructuralError.
    void validate() const;
};

struct AblationConfig
{
    TrainConfig train;
    bool align = true;          ///< Procrustes-align before measuring
    std::size_t threads = 1;    ///< grid points trained concurrently
    double region_radius = 20.0;
};

/**
 * Landmark positions 0..l-1 ordered by (i mod 4, i), truncated to each size.
 * Nested, and spread over the face at every size.
 */
std::vector<std::vector<std::size_t>> default_landmark_nesting(std::size_t landmark_count,
                                                               std::span<const std::size_t> sizes);

/**
 * One cascade per landmark subset, vertices unchanged. Series: "mae" and
 * "mae_<region>" over the test set, and "objective_stage_<k>" for k = 0..K on
 * the training set.
 */
AblationResult landmark_ablation(const Dataset& train, const Dataset& test,
                                 std::span<const std::vector<std::size_t>> nested_subsets,
                                 const AblationConfig& config);

/// Positions of the landmarks in the nose, eye and mouth regions.
std::vector<std::size_t> facial_component_landmarks(const LandmarkSpec& spec);

/**
 * Nested vertex sets for the coverage sweep. The innermost holds the nose,
 * eye and mouth regions plus every landmark vertex; the rest of the mesh is
 * added by distance to the nearest landmark, the last set being the whole
 * mesh.
 */
std::vector<std::vector<std::uint32_t>> default_coverage_subsets(const Shape3D& reference,
                                                                 const LandmarkSpec& spec,
                                                                 const RegionPartition& partition,
                                                                 std::size_t grid_points = 4);

/**
 * One cascade per vertex subset with a fixed landmark set. Series: "mae"
 * over each subset and "mae_innermost" over the first subset. Each MAE is
 * aligned over the vertices it measures.
 */
AblationResult vertex_coverage_ablation(const Dataset& train, const Dataset& test,
                                        std::span<const std::vector<std::uint32_t>> nested_subsets,
                                        std::span<const std::size_t> landmark_positions,
                                        const AblationConfig& config);

/**
 * Every factor-th vertex of region (sorted), plus every landmark vertex.
 * Sets come back ordered by increasing size.
 */
std::vector<std::vector<std::uint32_t>> density_subsets(std::span<const std::uint32_t> region,
                                                        const LandmarkSpec& spec,
                                                        std::span<const std::size_t> factors);

/**
 * One cascade per density. Series: "mae" over each subset, "mae_common" over
 * the vertices shared by all subsets.
 */
AblationResult vertex_density_ablation(const Dataset& train, const Dataset& test,
                                       std::span<const std::vector<std::uint32_t>> subsets,
                                       std::span<const std::size_t> landmark_positions,
                                       const AblationConfig& config);

/// Training objective per stage, divided by its stage-0 value. Series "objective" and "objective_raw".
AblationResult convergence_curve(const Dataset& train, const TrainConfig& config);

/**
 * Clean-trained (grid 1) against disturbed-trained (grid 2) cascades on test
 * landmarks disturbed by N(0, sigma_test^2) from eval_seed. Series "mae".
 */
AblationResult noise_mode_comparison(const Dataset& train, const Dataset& test, double sigma_test,
                                     const TrainConfig& config_clean, const TrainConfig& config_disturbed,
                                     std::uint64_t eval_seed, std::size_t threads = 1);

/// Test landmarks with the given disturbance, one independent stream per sample.
std::vector<LandmarkSet2D> disturbed_inputs(const Dataset& test, double sigma, std::uint64_t seed);

/// predict_batch over all inputs in chunks.
std::vector<Shape3D> predict_all(const CascadeModel& model, std::span<const LandmarkSet2D> inputs);

} // namespace csr3d

#endif // CSR3D_METRICS_HPP
