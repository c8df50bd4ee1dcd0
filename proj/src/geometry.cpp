/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: src/geometry.cpp
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
#include "csr3d/geometry.hpp"
#include "csr3d/error.hpp"

#include "Eigen/Dense"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_set>

namespace csr3d {

Shape3D::Shape3D(VertexMatrix vertices) : vertices_(std::move(vertices))
{
    if (vertices_.rows() == 0)
    {
        throw StructuralError("Shape3D: a shape needs at least one vertex");
    }
    if (!vertices_.allFinite())
    {
        throw ValidationError("Shape3D: non-finite vertex coordinate");
    }
}

Shape3D Shape3D::from_flat(std::span<const double> flat)
{
    if (flat.size() % 3 != 0)
    {
        throw StructuralError("Shape3D: flattened length " + std::to_string(flat.size()) + " is not a multiple of 3");
    }
    VertexMatrix v(static_cast<Eigen::Index>(flat.size() / 3), 3);
    std::copy(flat.begin(), flat.end(), v.data());
    return Shape3D(std::move(v));
}

Shape3D Shape3D::subset(std::span<const std::uint32_t> indices) const
{
    VertexMatrix v(static_cast<Eigen::Index>(indices.size()), 3);
    for (std::size_t i = 0; i < indices.size(); ++i)
    {
        if (indices[i] >= size())
        {
            throw StructuralError("Shape3D::subset: vertex index " + std::to_string(indices[i]) + " out of range");
        }
        v.row(static_cast<Eigen::Index>(i)) = vertices_.row(indices[i]);
    }
    return Shape3D(std::move(v));
}

void MeshTopology::validate(std::size_t vertex_count) const
{
    for (std::size_t t = 0; t < triangles.size(); ++t)
    {
        const auto& tri = triangles[t];
        for (auto idx : tri)
        {
            if (idx >= vertex_count)
            {
                throw StructuralError("MeshTopology: triangle " + std::to_string(t) + " references vertex " +
                                      std::to_string(idx) + " of " + std::to_string(vertex_count));
            }
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
        {
            throw StructuralError("MeshTopology: triangle " + std::to_string(t) + " repeats a vertex");
        }
    }
}

std::string_view region_name(Region region) noexcept
{
    switch (region)
    {
    case Region::Nose: return "nose";
    case Region::Eyes: return "eyes";
    case Region::Mouth: return "mouth";
    case Region::Other: return "other";
    }
    return "other";
}

void LandmarkSpec::validate(std::size_t vertex_count) const
{
    if (regions.size() != indices.size())
    {
        throw StructuralError("LandmarkSpec: " + std::to_string(indices.size()) + " indices but " +
                              std::to_string(regions.size()) + " region labels");
    }
    if (indices.size() < 4)
    {
        throw StructuralError("LandmarkSpec: at least 4 landmarks are required, got " + std::to_string(indices.size()));
    }
    std::unordered_set<std::uint32_t> seen;
    for (auto idx : indices)
    {
        if (idx >= vertex_count)
        {
            throw StructuralError("LandmarkSpec: landmark vertex " + std::to_string(idx) + " out of range for " +
                                  std::to_string(vertex_count) + " vertices");
        }
        if (!seen.insert(idx).second)
        {
            throw StructuralError("LandmarkSpec: duplicate landmark vertex " + std::to_string(idx));
        }
    }
}

LandmarkSpec LandmarkSpec::select(std::span<const std::size_t> positions) const
{
    LandmarkSpec out;
    out.indices.reserve(positions.size());
    out.regions.reserve(positions.size());
    for (auto p : positions)
    {
        if (p >= indices.size())
        {
            throw StructuralError("LandmarkSpec::select: position " + std::to_string(p) + " out of range");
        }
        out.indices.push_back(indices[p]);
        out.regions.push_back(regions[p]);
    }
    return out;
}

LandmarkSet2D::LandmarkSet2D(PointMatrix points, VisibilityMask visibility)
    : points_(std::move(points)), visibility_(std::move(visibility))
{
    if (static_cast<std::size_t>(points_.rows()) != visibility_.size())
    {
        throw StructuralError("LandmarkSet2D: " + std::to_string(points_.rows()) + " points but " +
                              std::to_string(visibility_.size()) + " visibility flags");
    }
    if (!points_.allFinite())
    {
        throw ValidationError("LandmarkSet2D: non-finite landmark coordinate");
    }
    for (std::size_t i = 0; i < visibility_.size(); ++i)
    {
        if (!visibility_[i])
        {
            points_.row(static_cast<Eigen::Index>(i)).setZero();
        }
    }
}

LandmarkSet2D LandmarkSet2D::all_visible(PointMatrix points)
{
    VisibilityMask mask(static_cast<std::size_t>(points.rows()), true);
    return LandmarkSet2D(std::move(points), std::move(mask));
}

std::size_t LandmarkSet2D::visible_count() const noexcept
{
    return static_cast<std::size_t>(std::count(visibility_.begin(), visibility_.end(), true));
}

LandmarkSet2D LandmarkSet2D::select(std::span<const std::size_t> positions) const
{
    PointMatrix p(static_cast<Eigen::Index>(positions.size()), 2);
    VisibilityMask mask(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i)
    {
        if (positions[i] >= size())
        {
            throw StructuralError("LandmarkSet2D::select: position " + std::to_string(positions[i]) + " out of range");
        }
        p.row(static_cast<Eigen::Index>(i)) = points_.row(static_cast<Eigen::Index>(positions[i]));
        mask[i] = visibility_[positions[i]];
    }
    return LandmarkSet2D(std::move(p), std::move(mask));
}

WeakPerspectiveCamera::WeakPerspectiveCamera(double scale) : scale_(scale)
{
    if (!std::isfinite(scale) || scale <= 0.0)
    {
        throw DegenerateGeometryError("WeakPerspectiveCamera: scale must be finite and positive, got " +
                                      std::to_string(scale));
    }
}

Eigen::Vector3d WeakPerspectiveCamera::view_direction() const
{
    const Eigen::Vector3d m1 = first_row();
    const Eigen::Vector3d m2 = second_row();
    return (m1 / m1.norm()).cross(m2 / m2.norm());
}

SimilarityTransform SimilarityTransform::inverse() const
{
    SimilarityTransform inv;
    inv.rotation = rotation.transpose();
    inv.scale = 1.0 / scale;
    inv.translation = -inv.scale * (inv.rotation * translation);
    return inv;
}

bool SimilarityTransform::is_valid(double tolerance) const
{
    if (!rotation.allFinite() || !translation.allFinite() || !std::isfinite(scale) || scale <= 0.0)
    {
        return false;
    }
    const double orthonormality = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    return orthonormality <= tolerance && std::abs(rotation.determinant() - 1.0) <= tolerance;
}

Eigen::Matrix3d rotation_from_yaw_pitch(double yaw_degrees, double pitch_degrees)
{
    const double yaw = yaw_degrees * std::numbers::pi / 180.0;
    const double pitch = pitch_degrees * std::numbers::pi / 180.0;
    Eigen::Matrix3d ry;
    ry << std::cos(yaw), 0.0, std::sin(yaw), 0.0, 1.0, 0.0, -std::sin(yaw), 0.0, std::cos(yaw);
    Eigen::Matrix3d rx;
    rx << 1.0, 0.0, 0.0, 0.0, std::cos(pitch), -std::sin(pitch), 0.0, std::sin(pitch), std::cos(pitch);
    return rx * ry;
}

LandmarkSet2D project_points(const VertexMatrix& landmark_points, const WeakPerspectiveCamera& camera,
                             const VisibilityMask& mask)
{
    const auto l = static_cast<std::size_t>(landmark_points.rows());
    if (mask.size() != l)
    {
        throw StructuralError("project: " + std::to_string(l) + " landmarks but mask of length " +
                              std::to_string(mask.size()));
    }
    const double f = camera.scale();
    PointMatrix points(landmark_points.rows(), 2);
    for (Eigen::Index i = 0; i < landmark_points.rows(); ++i)
    {
        points(i, 0) = f * landmark_points(i, 0);
        points(i, 1) = f * landmark_points(i, 1);
    }
    return LandmarkSet2D(std::move(points), mask);
}

LandmarkSet2D project(const Shape3D& shape, const LandmarkSpec& spec, const WeakPerspectiveCamera& camera,
                      const VisibilityMask& mask)
{
    return project_points(shape.subset(spec.indices).vertices(), camera, mask);
}

WeakPerspectiveCamera estimate_camera(const LandmarkSet2D& landmarks2d, const VertexMatrix& landmarks3d)
{
    if (static_cast<std::size_t>(landmarks3d.rows()) != landmarks2d.size())
    {
        throw StructuralError("estimate_camera: " + std::to_string(landmarks2d.size()) + " 2D landmarks but " +
                              std::to_string(landmarks3d.rows()) + " 3D landmarks");
    }
    double numerator = 0.0;
    double denominator = 0.0;
    for (std::size_t i = 0; i < landmarks2d.size(); ++i)
    {
        if (!landmarks2d.visible(i))
        {
            continue;
        }
        const auto r = static_cast<Eigen::Index>(i);
        numerator += landmarks2d.points()(r, 0) * landmarks3d(r, 0) + landmarks2d.points()(r, 1) * landmarks3d(r, 1);
        denominator += landmarks3d(r, 0) * landmarks3d(r, 0) + landmarks3d(r, 1) * landmarks3d(r, 1);
    }
    if (denominator == 0.0)
    {
        throw DegenerateGeometryError("estimate_camera: no visible landmark with a nonzero (x, y) position");
    }
    const double f = numerator / denominator;
    if (!(f > 0.0) || !std::isfinite(f))
    {
        throw DegenerateGeometryError("estimate_camera: fitted scale " + std::to_string(f) + " is not positive");
    }
    return WeakPerspectiveCamera(f);
}

VertexMatrix vertex_normals(const Shape3D& shape, const MeshTopology& topology)
{
    topology.validate(shape.size());
    const auto& v = shape.vertices();
    VertexMatrix normals = VertexMatrix::Zero(v.rows(), 3);
    for (const auto& tri : topology.triangles)
    {
        const Eigen::Vector3d a = v.row(tri[0]);
        const Eigen::Vector3d b = v.row(tri[1]);
        const Eigen::Vector3d c = v.row(tri[2]);
        // Twice the area times the unit normal, so the sum is area-weighted.
        const Eigen::Vector3d weighted = (b - a).cross(c - a);
        for (auto idx : tri)
        {
            normals.row(idx) += weighted.transpose();
        }
    }
    for (Eigen::Index i = 0; i < normals.rows(); ++i)
    {
        const double len = normals.row(i).norm();
        if (!(len > 0.0))
        {
            throw DegenerateGeometryError("vertex_normals: vertex " + std::to_string(i) +
                                          " has no incident non-degenerate triangle");
        }
        normals.row(i) /= len;
    }
    return normals;
}

VisibilityMask landmark_visibility(const VertexMatrix& normals, const WeakPerspectiveCamera& camera)
{
    const Eigen::Vector3d d = camera.view_direction();
    VisibilityMask mask(static_cast<std::size_t>(normals.rows()));
    for (Eigen::Index i = 0; i < normals.rows(); ++i)
    {
        // sgn(0) = 0 gives v = 1/2; a grazing landmark is treated as invisible.
        mask[static_cast<std::size_t>(i)] = normals.row(i).dot(d) > 0.0;
    }
    return mask;
}

ProcrustesResult procrustes_align(const Shape3D& source, const Shape3D& target, ProcrustesMode mode)
{
    if (source.size() != target.size())
    {
        throw StructuralError("procrustes_align: source has " + std::to_string(source.size()) +
                              " vertices, target has " + std::to_string(target.size()));
    }
    if (source.size() < 3)
    {
        throw StructuralError("procrustes_align: at least 3 vertices are required");
    }
    const auto& p = source.vertices();
    const auto& q = target.vertices();
    const Eigen::RowVector3d mu_p = p.colwise().mean();
    const Eigen::RowVector3d mu_q = q.colwise().mean();
    const VertexMatrix pc = p.rowwise() - mu_p;
    const VertexMatrix qc = q.rowwise() - mu_q;

    const Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 3>> spread(pc);
    const auto& sv = spread.singularValues();
    if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0))
    {
        throw DegenerateGeometryError("procrustes_align: source points are coincident or collinear");
    }

    const Eigen::Matrix3d cov = pc.transpose() * qc;
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    Eigen::Vector3d d = Eigen::Vector3d::Ones();
    if ((v * u.transpose()).determinant() < 0.0)
    {
        d(2) = -1.0;
    }

    SimilarityTransform xf;
    xf.rotation = v * d.asDiagonal() * u.transpose();
    xf.scale = 1.0;
    if (mode == ProcrustesMode::Similarity)
    {
        xf.scale = svd.singularValues().dot(d) / pc.squaredNorm();
        if (!(xf.scale > 0.0))
        {
            throw DegenerateGeometryError("procrustes_align: optimal scale is not positive");
        }
    }
    xf.translation = mu_q.transpose() - xf.scale * (xf.rotation * mu_p.transpose());
    return {xf, apply_pose(source, xf)};
}

Shape3D apply_pose(const Shape3D& shape, const SimilarityTransform& transform)
{
    VertexMatrix out = (transform.scale * (shape.vertices() * transform.rotation.transpose())).rowwise() +
                       transform.translation.transpose();
    return Shape3D(std::move(out));
}

LandmarkSet2D mask_to_reference(const LandmarkSet2D& landmarks, const VisibilityMask& reference)
{
    if (reference.size() != landmarks.size())
    {
        throw StructuralError("mask_to_reference: " + std::to_string(landmarks.size()) +
                              " landmarks but reference mask of length " + std::to_string(reference.size()));
    }
    VisibilityMask combined(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i)
    {
        combined[i] = landmarks.visible(i) && reference[i];
    }
    return LandmarkSet2D(landmarks.points(), std::move(combined));
}

} // namespace csr3d
