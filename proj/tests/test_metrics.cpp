/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: tests/test_metrics.cpp
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
#include "doctest.h"

#include "fixtures.hpp"
#include "oracles.hpp"

#include "csr3d/error.hpp"
#include "csr3d/metrics.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace csr3d;

namespace {

Shape3D two_points(double ax, double ay, double az, double bx, double by, double bz)
{
    return Shape3D((VertexMatrix(2, 3) << ax, ay, az, bx, by, bz).finished());
}

struct Split
{
    Dataset train;
    Dataset test;
};

const Split& head_split()
{
    static const Split s = [] {
        auto [train, test] = split(generate_dataset(fixture::small_head(), fixture::small_config(32, 4)), 0.5, 2);
        return Split{std::move(train), std::move(test)};
    }();
    return s;
}

} // namespace

TEST_SUITE("mae")
{
    TEST_CASE("identical shapes")
    {
        std::mt19937_64 rng(1);
        const Shape3D s = oracle::random_shape(50, rng);
        CHECK(mae(s, s, false).value == 0.0);
        CHECK(mae(s, s, true).value < 1e-12);
    }

    TEST_CASE("uniform offset with and without alignment")
    {
        std::mt19937_64 rng(2);
        const Shape3D s = oracle::random_shape(50, rng);
        VertexMatrix moved = s.vertices();
        moved.col(0).array() += 1.0;
        CHECK(mae(s, Shape3D(moved), false).value == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(mae(s, Shape3D(moved), true).value < 1e-12);
    }

    TEST_CASE("hand-evaluated pair")
    {
        const Shape3D gt = two_points(0, 0, 0, 10, 0, 0);
        const Shape3D rec = two_points(3, 0, 0, 10, 4, 0);
        const MetricValue m = mae(gt, rec, false);
        CHECK(m.value == 3.5);
        CHECK(m.map.per_vertex == std::vector<double>{3.0, 4.0});
        CHECK(m.map.mean == 3.5);
        CHECK(m.map.std == 0.5);
        CHECK(mae(gt, rec, false, MaeNorm::Frobenius).value == doctest::Approx(2.5).epsilon(1e-15));
    }

    TEST_CASE("invariant to similarity transforms of the reconstruction")
    {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial)
        {
            const Shape3D gt = oracle::random_shape(80, rng);
            VertexMatrix noisy = gt.vertices();
            std::normal_distribution<double> g(0.0, 2.0);
            for (Eigen::Index i = 0; i < noisy.size(); ++i)
            {
                noisy.data()[i] += g(rng);
            }
            const Shape3D rec(noisy);
            SimilarityTransform t;
            t.rotation = oracle::random_rotation(rng);
            t.scale = std::uniform_real_distribution<double>(0.3, 3.0)(rng);
            t.translation = Eigen::Vector3d(g(rng), g(rng), g(rng)) * 40.0;
            const double base = mae(gt, rec, true).value;
            const double moved = mae(gt, apply_pose(rec, t), true).value;
            CHECK(std::abs(moved - base) <= 1e-9 * base);
        }
    }

    TEST_CASE("alignment never increases the error")
    {
        std::mt19937_64 rng(4);
        for (int trial = 0; trial < 10; ++trial)
        {
            const Shape3D a = oracle::random_shape(30, rng);
            const Shape3D b = oracle::random_shape(30, rng);
            CHECK(mae(a, b, true, MaeNorm::Frobenius).value <= mae(a, b, false, MaeNorm::Frobenius).value + 1e-12);
            CHECK(mae(a, b, false).value > 0.0);
        }
    }

    TEST_CASE("size mismatch")
    {
        std::mt19937_64 rng(5);
        CHECK_THROWS_AS(mae(oracle::random_shape(4, rng), oracle::random_shape(5, rng), false), StructuralError);
    }

    TEST_CASE("batch mean and spread")
    {
        const std::vector<Shape3D> gt{two_points(0, 0, 0, 1, 1, 1), two_points(0, 0, 0, 1, 1, 1)};
        const std::vector<Shape3D> rec{two_points(1, 0, 0, 2, 1, 1), two_points(3, 0, 0, 4, 1, 1)};
        const Summary s = batch_mae(gt, rec, false);
        CHECK(s.mean == 2.0);
        CHECK(s.std == 1.0);
        CHECK_THROWS_AS(batch_mae(gt, std::span<const Shape3D>(rec).first(1), false), StructuralError);
    }

    TEST_CASE("error map rejects negative entries")
    {
        CHECK_THROWS_AS(ErrorMap::from_values({1.0, -0.5}), ValidationError);
        CHECK_THROWS_AS(ErrorMap::from_values({1.0, std::nan("")}), ValidationError);
        const ErrorMap m = ErrorMap::from_values({1.0, 2.0, 6.0});
        CHECK(m.mean == 3.0);
        CHECK(std::abs(m.std - std::sqrt(14.0 / 3.0)) < 1e-12);
    }
}

TEST_SUITE("npde")
{
    TEST_CASE("identical depths")
    {
        std::mt19937_64 rng(6);
        const Shape3D s = oracle::random_shape(20, rng);
        CHECK(npde(s, s).value == 0.0);
    }

    TEST_CASE("one vertex off by one over a depth range of ten")
    {
        const Shape3D gt((VertexMatrix(3, 3) << 0, 0, 0, 1, 0, 10, 0, 1, 5).finished());
        const Shape3D rec((VertexMatrix(3, 3) << 0, 0, 0, 1, 0, 10, 0, 1, 6).finished());
        const MetricValue m = npde(gt, rec);
        CHECK(m.map.per_vertex[2] == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(m.map.per_vertex[0] == 0.0);
        CHECK(m.value == doctest::Approx(0.1 / 3.0).epsilon(1e-15));
    }

    TEST_CASE("flat ground truth")
    {
        const Shape3D flat((VertexMatrix(3, 3) << 0, 0, 2, 1, 0, 2, 0, 1, 2).finished());
        CHECK_THROWS_AS(npde(flat, flat), DegenerateGeometryError);
    }

    TEST_CASE("invariant to common depth translation and scaling")
    {
        std::mt19937_64 rng(7);
        const Shape3D gt = oracle::random_shape(40, rng);
        const Shape3D rec = oracle::random_shape(40, rng);
        const double base = npde(gt, rec).value;
        VertexMatrix a = gt.vertices();
        VertexMatrix b = rec.vertices();
        a.col(2).array() += 17.0;
        b.col(2).array() += 17.0;
        CHECK(npde(Shape3D(a), Shape3D(b)).value == doctest::Approx(base).epsilon(1e-12));
        CHECK(npde(Shape3D(3.0 * gt.vertices()), Shape3D(3.0 * rec.vertices())).value ==
              doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_SUITE("region_mae")
{
    TEST_CASE("partition of the synthetic head")
    {
        const auto& m = fixture::small_head();
        const RegionPartition p = region_partition(m.neutral_mean, m.landmark_spec);
        CHECK_NOTHROW(p.validate(m.vertex_count()));
        CHECK(p.vertex_count() == m.vertex_count());
        for (auto region : all_regions)
        {
            CHECK_FALSE(p.of(region).empty());
        }
        for (std::size_t j = 0; j < m.landmark_spec.size(); ++j)
        {
            const auto& members = p.of(m.landmark_spec.regions[j]);
            CHECK(std::binary_search(members.begin(), members.end(), m.landmark_spec.indices[j]));
        }
    }

    TEST_CASE("gaps and overlaps")
    {
        RegionPartition p;
        p.members[0] = {0, 1};
        p.members[3] = {2};
        CHECK_NOTHROW(p.validate(3));
        CHECK_THROWS_AS(p.validate(4), StructuralError);
        p.members[1] = {1};
        CHECK_THROWS_AS(p.validate(3), StructuralError);
        p.members[1] = {7};
        CHECK_THROWS_AS(p.validate(3), StructuralError);
    }

    TEST_CASE("uniform, localized and recombined errors")
    {
        const auto& m = fixture::small_head();
        const RegionPartition p = region_partition(m.neutral_mean, m.landmark_spec);
        const Shape3D& gt = m.neutral_mean;

        VertexMatrix shifted = gt.vertices();
        shifted.col(1).array() += 2.0;
        const RegionMae uniform = region_mae(gt, Shape3D(shifted), p, false);
        for (auto region : all_regions)
        {
            CHECK(uniform.value[static_cast<std::size_t>(region)] == doctest::Approx(2.0).epsilon(1e-14));
        }

        VertexMatrix nose_only = gt.vertices();
        for (auto v : p.of(Region::Nose))
        {
            nose_only(v, 2) += 1.5;
        }
        const RegionMae local = region_mae(gt, Shape3D(nose_only), p, false);
        CHECK(local.value[static_cast<std::size_t>(Region::Nose)] == 1.5);
        CHECK(local.value[static_cast<std::size_t>(Region::Eyes)] == 0.0);
        CHECK(local.value[static_cast<std::size_t>(Region::Mouth)] == 0.0);
        CHECK(local.value[static_cast<std::size_t>(Region::Other)] == 0.0);

        std::mt19937_64 rng(8);
        VertexMatrix noisy = gt.vertices();
        std::normal_distribution<double> g(0.0, 1.0);
        for (Eigen::Index i = 0; i < noisy.size(); ++i)
        {
            noisy.data()[i] += g(rng);
        }
        const RegionMae r = region_mae(gt, Shape3D(noisy), p, false);
        double weighted = 0.0;
        std::size_t total = 0;
        for (std::size_t k = 0; k < 4; ++k)
        {
            weighted += r.value[k] * static_cast<double>(r.count[k]);
            total += r.count[k];
        }
        CHECK(total == gt.size());
        const double global = mae(gt, Shape3D(noisy), false).value;
        CHECK(std::abs(weighted / static_cast<double>(total) - global) <= 1e-12 * global);
    }
}

TEST_SUITE("ablation helpers")
{
    TEST_CASE("default landmark nesting")
    {
        const std::vector<std::size_t> sizes{17, 34, 51, 68};
        const auto nest = default_landmark_nesting(68, sizes);
        REQUIRE(nest.size() == 4);
        for (std::size_t i = 0; i < 4; ++i)
        {
            CHECK(nest[i].size() == sizes[i]);
            if (i > 0)
            {
                for (auto p : nest[i - 1])
                {
                    CHECK(std::find(nest[i].begin(), nest[i].end(), p) != nest[i].end());
                }
            }
        }
        const std::vector<std::size_t> bad{3};
        CHECK_THROWS_AS(default_landmark_nesting(68, bad), ValidationError);
    }

    TEST_CASE("facial-component landmarks")
    {
        const auto positions = facial_component_landmarks(fixture::small_head().landmark_spec);
        CHECK(positions.size() == 51);
        CHECK(positions.front() == 17);
        CHECK(positions.back() == 67);
    }

    TEST_CASE("coverage and density subsets")
    {
        const auto& m = fixture::small_head();
        const RegionPartition p = region_partition(m.neutral_mean, m.landmark_spec);
        const auto coverage = default_coverage_subsets(m.neutral_mean, m.landmark_spec, p, 4);
        REQUIRE(coverage.size() == 4);
        CHECK(coverage.back().size() == m.vertex_count());
        for (std::size_t g = 1; g < coverage.size(); ++g)
        {
            CHECK(coverage[g].size() > coverage[g - 1].size());
            CHECK(std::includes(coverage[g].begin(), coverage[g].end(), coverage[g - 1].begin(),
                                coverage[g - 1].end()));
        }

        const std::vector<std::size_t> factors{4, 2, 1};
        const auto density = density_subsets(p.of(Region::Nose), m.landmark_spec, factors);
        REQUIRE(density.size() == 3);
        for (std::size_t g = 1; g < density.size(); ++g)
        {
            CHECK(density[g].size() > density[g - 1].size());
        }
        for (const auto& s : density)
        {
            for (auto idx : m.landmark_spec.indices)
            {
                CHECK(std::binary_search(s.begin(), s.end(), idx));
            }
        }
        const std::vector<std::size_t> zero{0};
        CHECK_THROWS_AS(density_subsets(p.of(Region::Nose), m.landmark_spec, zero), ValidationError);
    }

    TEST_CASE("result validation")
    {
        AblationResult r;
        r.grid = {1.0, 2.0};
        r.series.push_back({"mae", {0.5, 0.4}, {0.0, 0.0}});
        CHECK_NOTHROW(r.validate());
        CHECK(r.at("mae").values[1] == 0.4);
        CHECK_THROWS_AS(r.at("npde"), StructuralError);
        r.grid = {2.0, 2.0};
        CHECK_THROWS_AS(r.validate(), StructuralError);
        r.grid = {1.0, 2.0, 3.0};
        CHECK_THROWS_AS(r.validate(), StructuralError);
        CHECK(axis_name(AblationAxis::VertexDensity) == "vertex-density");
    }
}

TEST_SUITE("ablations")
{
    TEST_CASE("landmark count")
    {
        const auto& data = head_split();
        const std::vector<std::size_t> sizes{17, 34, 51, 68};
        const auto nest = default_landmark_nesting(68, sizes);
        AblationConfig config;
        config.threads = 2;
        const AblationResult r = landmark_ablation(data.train, data.test, nest, config);
        CHECK_NOTHROW(r.validate());
        CHECK(r.grid == std::vector<double>{17, 34, 51, 68});
        for (std::size_t k = 0; k <= config.train.stages; ++k)
        {
            const auto& obj = r.at("objective_stage_" + std::to_string(k)).values;
            for (std::size_t g = 1; g < obj.size(); ++g)
            {
                if (k == 0)
                {
                    CHECK(obj[g] == obj[g - 1]);
                }
                else if (k == 1)
                {
                    CHECK(obj[g] <= obj[g - 1] * (1.0 + 1e-9));
                }
            }
        }
        for (auto region : all_regions)
        {
            CHECK(r.at("mae_" + std::string(region_name(region))).values.size() == 4);
        }

        // The 68-landmark point is the plain model.
        const CascadeModel baseline = train_cascade(data.train, config.train).first;
        std::vector<double> values;
        for (const auto& s : data.test.samples)
        {
            values.push_back(mae(s.shape, predict(baseline, s.landmarks), true).value);
        }
        CHECK(std::abs(r.at("mae").values[3] - summarize(values).mean) <= 1e-12 * summarize(values).mean);
    }

    TEST_CASE("landmark subsets must nest")
    {
        const auto& data = head_split();
        const std::vector<std::vector<std::size_t>> bad{{0, 1, 2, 3}, {4, 5, 6, 7, 8}};
        CHECK_THROWS_AS(landmark_ablation(data.train, data.test, bad, AblationConfig{}), ValidationError);
        const std::vector<std::vector<std::size_t>> tiny{{0, 1, 2}};
        CHECK_THROWS_AS(landmark_ablation(data.train, data.test, tiny, AblationConfig{}), ValidationError);
    }

    TEST_CASE("vertex coverage keeps the innermost error fixed")
    {
        const auto& data = head_split();
        const auto& m = fixture::small_head();
        const RegionPartition p = region_partition(m.neutral_mean, m.landmark_spec);
        const auto subsets = default_coverage_subsets(m.neutral_mean, m.landmark_spec, p, 4);
        const auto positions = facial_component_landmarks(m.landmark_spec);
        AblationConfig config;
        config.threads = 2;
        const AblationResult r = vertex_coverage_ablation(data.train, data.test, subsets, positions, config);
        CHECK_NOTHROW(r.validate());
        const auto& inner = r.at("mae_innermost").values;
        for (double v : inner)
        {
            CHECK(std::abs(v - inner.front()) <= 1e-10);
        }
        CHECK(r.at("mae").values.front() == doctest::Approx(inner.front()).epsilon(1e-12));
    }

    TEST_CASE("vertex density keeps the common error fixed")
    {
        const auto& data = head_split();
        const auto& m = fixture::small_head();
        const RegionPartition p = region_partition(m.neutral_mean, m.landmark_spec);
        const std::vector<std::size_t> factors{4, 2, 1};
        const auto subsets = density_subsets(p.of(Region::Nose), m.landmark_spec, factors);
        const auto positions = facial_component_landmarks(m.landmark_spec);
        const AblationResult r =
            vertex_density_ablation(data.train, data.test, subsets, positions, AblationConfig{});
        CHECK_NOTHROW(r.validate());
        const auto& common = r.at("mae_common").values;
        for (double v : common)
        {
            CHECK(std::abs(v - common.front()) <= 1e-10);
        }
        for (std::size_t g = 1; g < r.grid.size(); ++g)
        {
            CHECK(r.grid[g] > r.grid[g - 1]);
        }
    }

    TEST_CASE("convergence curve")
    {
        TrainConfig config;
        config.stages = 6;
        const AblationResult r = convergence_curve(head_split().train, config);
        CHECK_NOTHROW(r.validate());
        const auto& curve = r.at("objective").values;
        REQUIRE(curve.size() == 7);
        CHECK(curve[0] == 1.0);
        for (std::size_t k = 1; k < curve.size(); ++k)
        {
            CHECK(curve[k] <= curve[k - 1] * (1.0 + 1e-9));
        }
    }

    TEST_CASE("noise modes")
    {
        const auto& data = head_split();
        TrainConfig clean;
        TrainConfig disturbed;
        disturbed.noise_std = 0.11 * image_inter_eye_distance(data.train);
        disturbed.noise_replicas = 3;
        disturbed.seed = 5;

        const AblationResult noisy = noise_mode_comparison(data.train, data.test, disturbed.noise_std, clean,
                                                           disturbed, 9, 2);
        CHECK_NOTHROW(noisy.validate());
        CHECK(noisy.at("mae").values[1] < noisy.at("mae").values[0]);

        const AblationResult again = noise_mode_comparison(data.train, data.test, disturbed.noise_std, clean,
                                                           disturbed, 9, 1);
        CHECK(again.at("mae").values == noisy.at("mae").values);
        CHECK(again.at("mae").stds == noisy.at("mae").stds);

        CHECK_THROWS_AS(noise_mode_comparison(data.train, data.test, -1.0, clean, disturbed, 9), ValidationError);
        CHECK_THROWS_AS(noise_mode_comparison(data.train, data.test, 1.0, clean, clean, 9), ValidationError);
    }

    TEST_CASE("disturbed inputs are deterministic and keep the mask")
    {
        const auto& test = head_split().test;
        const auto a = disturbed_inputs(test, 3.0, 1);
        const auto b = disturbed_inputs(test, 3.0, 1);
        REQUIRE(a.size() == test.size());
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            CHECK(a[i].points() == b[i].points());
            CHECK(a[i].visibility() == test.samples[i].landmarks.visibility());
        }
    }
}
