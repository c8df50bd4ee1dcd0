/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: include/csr3d/geometry.hpp
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

#ifndef CSR3D_GEOMETRY_HPP
#define CSR3D_GEOMETRY_HPP

#include "Eigen/Core"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace csr3d {

/// n x 3, one vertex per row. Row-major so that data() is (x1, y1, z1, x2, ...).
using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
/// l x 2, one image point per row. data() is (u1, v1, u2, v2, ...).
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

using VisibilityMask = std::vector<bool>;

/**
 * A dense 3D point set in millimetres. All shapes of a dataset share the
 * vertex count and the semantic meaning of each vertex index.
 */
class Shape3D
{
public:
    Shape3D() = default;

    /// Throws ValidationError on non-finite coordinates, StructuralError when empty.
    explicit Shape3D(VertexMatrix vertices);

    /// Builds a shape from the flattened (x1, y1, z1, ...) layout.
    static Shape3D from_flat(std::span<const double> flat);

    std::size_t size() const noexcept { return static_cast<std::size_t>(vertices_.rows()); }
    bool empty() const noexcept { return vertices_.rows() == 0; }

    const VertexMatrix& vertices() const noexcept { return vertices_; }
    Eigen::Vector3d vertex(std::size_t i) const { return vertices_.row(static_cast<Eigen::Index>(i)).transpose(); }

    std::span<const double> flat() const noexcept
    {
        return {vertices_.data(), static_cast<std::size_t>(vertices_.size())};
    }

    /// The rows listed in indices, in that order.
    Shape3D subset(std::span<const std::uint32_t> indices) const;

private:
    VertexMatrix vertices_;
};

/// Triangles as index triples; counter-clockwise winding is the outward side.
struct MeshTopology
{
    std::vector<std::array<std::uint32_t, 3>> triangles;

    bool empty() const noexcept { return triangles.empty(); }

    /// Throws StructuralError if an index is >= vertex_count or a triangle repeats a vertex.
    void validate(std::size_t vertex_count) const;
};

enum class Region : std::uint8_t { Nose = 0, Eyes = 1, Mouth = 2, Other = 3 };

inline constexpr std::array<Region, 4> all_regions{Region::Nose, Region::Eyes, Region::Mouth, Region::Other};

std::string_view region_name(Region region) noexcept;

/// Which vertices are landmarks, and the facial region each landmark belongs to.
struct LandmarkSpec
{
    std::vector<std::uint32_t> indices;
    std::vector<Region> regions;

    std::size_t size() const noexcept { return indices.size(); }

    /// Distinct indices, each < vertex_count, at least 4 of them, one region per index.
    void validate(std::size_t vertex_count) const;

    /// The landmarks at the given positions (positions index into this spec, not into a shape).
    LandmarkSpec select(std::span<const std::size_t> positions) const;
};

/**
 * l image points with a visibility flag each. Invisible points are stored
 * as exactly (0, 0); the constructor enforces that by zeroing them.
 */
class LandmarkSet2D
{
public:
    LandmarkSet2D() = default;

    /// Throws StructuralError on a size mismatch, ValidationError on non-finite coordinates.
    LandmarkSet2D(PointMatrix points, VisibilityMask visibility);

    static LandmarkSet2D all_visible(PointMatrix points);

    std::size_t size() const noexcept { return visibility_.size(); }
    std::size_t visible_count() const noexcept;

    const PointMatrix& points() const noexcept { return points_; }
    const VisibilityMask& visibility() const noexcept { return visibility_; }
    bool visible(std::size_t i) const { return visibility_[i]; }

    /// (u1, v1, u2, v2, ...)
    std::span<const double> flat() const noexcept
    {
        return {points_.data(), static_cast<std::size_t>(points_.size())};
    }

    LandmarkSet2D select(std::span<const std::size_t> positions) const;

private:
    PointMatrix points_;
    VisibilityMask visibility_;
};

/**
 * Scaled-orthographic camera, M = f * [I2 | 0]: a 3D point (x, y, z) maps
 * to f * (x, y). Image coordinates are y-up in the world frame's handedness.
 */
class WeakPerspectiveCamera
{
public:
    /// Throws DegenerateGeometryError unless scale is finite and > 0.
    explicit WeakPerspectiveCamera(double scale);

    double scale() const noexcept { return scale_; }

    Eigen::Vector3d first_row() const noexcept { return {scale_, 0.0, 0.0}; }
    Eigen::Vector3d second_row() const noexcept { return {0.0, scale_, 0.0}; }

    /// (M1 / |M1|) x (M2 / |M2|): the unit direction towards the camera.
    Eigen::Vector3d view_direction() const;

private:
    double scale_;
};

/// p -> scale * rotation * p + translation.
struct SimilarityTransform
{
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    double scale = 1.0;

    static SimilarityTransform identity() { return {}; }

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return scale * (rotation * p) + translation; }

    SimilarityTransform inverse() const;

    /// Orthonormal rotation with det +1 and positive finite scale, to within tolerance.
    bool is_valid(double tolerance = 1e-10) const;
};

/**
 * Right-handed rotation: yaw about +y, then pitch about +x, i.e.
 * R = Rx(pitch) * Ry(yaw). Angles in degrees. Yaw 90 maps (1, 0, 0) to (0, 0, -1).
 */
Eigen::Matrix3d rotation_from_yaw_pitch(double yaw_degrees, double pitch_degrees);

/// f * (x, y) of each landmark vertex; masked-out landmarks become (0, 0) and invisible.
LandmarkSet2D project(const Shape3D& shape, const LandmarkSpec& spec, const WeakPerspectiveCamera& camera,
                      const VisibilityMask& mask);

/// Same as project, for landmark vertices already gathered into an l x 3 matrix.
LandmarkSet2D project_points(const VertexMatrix& landmark_points, const WeakPerspectiveCamera& camera,
                             const VisibilityMask& mask);

/**
 * Least-squares scale over the visible landmarks:
 * f = sum(u x + v y) / sum(x^2 + y^2).
 *
 * Throws DegenerateGeometryError if the visible 3D points all sit on the
 * optical axis or the fitted scale is not positive.
 */
WeakPerspectiveCamera estimate_camera(const LandmarkSet2D& landmarks2d, const VertexMatrix& landmarks3d);

/// Area-weighted vertex normals, unit length. Throws DegenerateGeometryError for vertices without incident area.
VertexMatrix vertex_normals(const Shape3D& shape, const MeshTopology& topology);

/// Visible iff normal . view_direction > 0. Grazing normals count as invisible.
VisibilityMask landmark_visibility(const VertexMatrix& normals, const WeakPerspectiveCamera& camera);

enum class ProcrustesMode { Similarity, Rigid };

struct ProcrustesResult
{
    SimilarityTransform transform;
    Shape3D aligned;
};

/**
 * Best proper (det +1) alignment of source onto target in the least-squares sense.
 * Rigid mode pins the scale to 1.
 */
ProcrustesResult procrustes_align(const Shape3D& source, const Shape3D& target,
                                  ProcrustesMode mode = ProcrustesMode::Similarity);

Shape3D apply_pose(const Shape3D& shape, const SimilarityTransform& transform);

/// Visibility becomes (input AND reference); every point that ends up invisible is zeroed.
LandmarkSet2D mask_to_reference(const LandmarkSet2D& landmarks, const VisibilityMask& reference);

} // namespace csr3d

#endif // CSR3D_GEOMETRY_HPP
