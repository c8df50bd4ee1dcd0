/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: tests/fixtures.hpp
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
// Small datasets shared by the test suites and the acceptance runner.
#pragma once

#include "csr3d/synthdata.hpp"

#include "Eigen/Dense"

#include <cstdint>
#include <random>

namespace fixture {

/**
 * Shapes from an exact linear model, S = mean + B c, seen frontally with
 * every landmark visible. Sample 0 has c = 0 and is the only frontal-neutral
 * one, so the initial state is the mean itself and the landmark deviations
 * are a linear function of c.
 */
struct LinearModel
{
    csr3d::VertexMatrix mean;
    Eigen::MatrixXd basis; ///< 3n x r
    csr3d::LandmarkSpec spec;
    double camera_scale = 2.0;

    csr3d::Sample sample(const Eigen::VectorXd& coeffs, bool frontal_neutral) const
    {
        const Eigen::VectorXd flat = basis * coeffs;
        csr3d::VertexMatrix v = mean;
        for (Eigen::Index i = 0; i < v.rows(); ++i)
        {
            v.row(i) += flat.segment(3 * i, 3).transpose();
        }
        csr3d::PointMatrix points(static_cast<Eigen::Index>(spec.size()), 2);
        for (std::size_t j = 0; j < spec.size(); ++j)
        {
            points.row(static_cast<Eigen::Index>(j)) = camera_scale * v.block(spec.indices[j], 0, 1, 2);
        }
        csr3d::Sample s;
        s.frontal_neutral = frontal_neutral;
        s.shape = csr3d::Shape3D(v);
        s.landmarks = csr3d::LandmarkSet2D::all_visible(points);
        return s;
    }
};

inline LinearModel linear_model(std::size_t n, std::size_t l, std::size_t rank, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    LinearModel m;
    m.mean.resize(static_cast<Eigen::Index>(n), 3);
    for (Eigen::Index i = 0; i < m.mean.size(); ++i)
    {
        m.mean.data()[i] = 50.0 * g(rng);
    }
    m.basis.resize(static_cast<Eigen::Index>(3 * n), static_cast<Eigen::Index>(rank));
    for (Eigen::Index i = 0; i < m.basis.size(); ++i)
    {
        m.basis.data()[i] = 3.0 * g(rng);
    }
    for (std::size_t j = 0; j < l; ++j)
    {
        m.spec.indices.push_back(static_cast<std::uint32_t>(3 * j + 1));
        m.spec.regions.push_back(csr3d::Region::Other);
    }
    return m;
}

inline csr3d::Dataset linear_dataset(const LinearModel& model, std::size_t samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    csr3d::Dataset d;
    d.landmark_spec = model.spec;
    d.camera_scale = model.camera_scale;
    d.seed = seed;
    for (std::size_t i = 0; i < samples; ++i)
    {
        Eigen::VectorXd c(model.basis.cols());
        for (Eigen::Index k = 0; k < c.size(); ++k)
        {
            c(k) = i == 0 ? 0.0 : g(rng);
        }
        d.samples.push_back(model.sample(c, i == 0));
    }
    return d;
}

/// A coarse synthetic head with few bases; cheap enough for every suite.
inline const csr3d::ShapeModel& small_head()
{
    static const csr3d::ShapeModel model = csr3d::build_shape_model({400, 6, 4, 11});
    return model;
}

inline csr3d::DatasetConfig small_config(std::size_t subjects, std::uint64_t seed = 0)
{
    csr3d::DatasetConfig c;
    c.subjects = subjects;
    c.expressions_per_subject = 3;
    c.yaw_grid = {-60.0, -30.0, 0.0, 30.0, 60.0};
    c.pitch_grid = {-15.0, 0.0, 15.0};
    c.seed = seed;
    return c;
}

} // namespace fixture
