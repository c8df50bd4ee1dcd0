/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: include/csr3d/cascade.hpp
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

#ifndef CSR3D_CASCADE_HPP
#define CSR3D_CASCADE_HPP

#include "csr3d/geometry.hpp"
#include "csr3d/synthdata.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace csr3d {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/**
 * One linear regressor of the cascade: 3n rows, 2l + 1 columns. The last
 * column is the stage bias, applied against a constant 1 appended to the
 * landmark deviation (u1, v1, ..., ul, vl, 1).
 */
struct RegressorStage
{
    RowMatrix weights;
};

/**
 * A trained cascade. Everything predict() needs is here; landmark_normals
 * and topology are only used for visibility estimation and mesh export and
 * may be empty.
 */
struct CascadeModel
{
    std::vector<RegressorStage> stages;
    Shape3D mean_shape;           ///< initial estimate S0
    LandmarkSet2D mean_landmarks; ///< U0, mean over frontal-neutral training samples
    WeakPerspectiveCamera camera{1.0};
    LandmarkSpec landmark_spec;
    VertexMatrix landmark_normals; ///< l x 3 unit normals of mean_shape at the landmarks, or empty
    MeshTopology topology;
    std::uint64_t train_fingerprint = 0;

    std::size_t vertex_count() const noexcept { return mean_shape.size(); }
    std::size_t landmark_count() const noexcept { return landmark_spec.size(); }
    std::size_t stage_count() const noexcept { return stages.size(); }

    /// Dimensional consistency of every part. Throws StructuralError or ValidationError.
    void validate() const;
};

struct TrainConfig
{
    std::size_t stages = 5;
    /// Ridge weight. Unset means 1e-8 * trace(G) / (2l + 1) for each stage's Gram matrix G.
    std::optional<double> ridge;
    /// Standard deviation of the landmark disturbance, image units. 0 trains on clean landmarks.
    double noise_std = 0.0;
    std::size_t noise_replicas = 1;
    std::uint64_t seed = 0;
    /// Fall back to a rank-revealing least-squares solve when the Gram matrix is ill-conditioned.
    bool rank_fallback = true;

    void validate() const;
    std::uint64_t hash() const;
};

/**
 * Per-stage training trace. stage_seconds is wall-clock and the only field
 * that differs between otherwise identical runs.
 */
struct TrainReport
{
    std::vector<double> objective_per_stage; ///< K + 1 values of sum_i |S*_i - S^k_i|^2, index 0 before stage 1
    std::vector<double> residual_per_stage;  ///< K values of the least-squares residual each stage attained
    std::vector<double> ridge_per_stage;
    std::vector<bool> fallback_per_stage;
    std::size_t sample_count = 0; ///< columns of the regression, replicas included
    std::vector<double> stage_seconds;
};

struct InitialState
{
    Shape3D mean_shape;
    LandmarkSet2D mean_landmarks;
    WeakPerspectiveCamera camera;
};

/**
 * Mean shape and mean landmarks of the frontal-neutral samples, and the
 * camera scale that maps one onto the other. A landmark's 2D mean is taken
 * over the samples where it is visible.
 *
 * Throws InitializationError without a frontal-neutral sample.
 */
InitialState init_state(const Dataset& training_set);

struct StageSolution
{
    RegressorStage stage;
    double ridge = 0.0;
    bool used_fallback = false;
    std::size_t rank = 0;
};

/// Ridge weight used when TrainConfig::ridge is unset.
double default_ridge(const Eigen::MatrixXd& gram);

/**
 * W = dS * dU^T * (dU * dU^T + ridge * I)^-1, with dS 3n x N and dU (2l+1) x N
 * whose last row is all ones.
 *
 * The normal equations are factored with Cholesky. When the reciprocal
 * condition estimate drops below 1e-12 and allow_fallback is set, the
 * problem is re-solved with a complete orthogonal decomposition, which
 * returns the minimum-norm minimiser. Otherwise a RankDeficiencyError names
 * the dimensions a pivoted QR could not resolve.
 */
StageSolution solve_stage(const Eigen::MatrixXd& delta_shapes, const Eigen::MatrixXd& delta_landmarks,
                          std::optional<double> ridge, bool allow_fallback = true);

/// Learns the K stages. Returns the model and a per-stage trace.
std::pair<CascadeModel, TrainReport> train_cascade(const Dataset& training_set, const TrainConfig& config);

/**
 * Runs the cascade on one set of landmarks. Invisible input landmarks
 * contribute zero deviation at every stage.
 */
Shape3D predict(const CascadeModel& model, const LandmarkSet2D& landmarks);

/// predict() over many inputs, streaming each stage matrix once per batch. Bit-identical to predict().
std::vector<Shape3D> predict_batch(const CascadeModel& model, std::span<const LandmarkSet2D> inputs);

/**
 * Self-occlusion mask for detected landmarks: fits a coarse camera to the
 * visible detections, then classifies the mean shape's landmark normals.
 * Combine with the detector's own flags through mask_to_reference.
 */
VisibilityMask estimate_visibility_for_input(const CascadeModel& model, const LandmarkSet2D& detected);

/// Adds N(0, sigma^2) to every visible coordinate. Invisible entries stay (0, 0).
LandmarkSet2D disturb_landmarks(const LandmarkSet2D& landmarks, double sigma, std::mt19937_64& rng);

} // namespace csr3d

#endif // CSR3D_CASCADE_HPP
