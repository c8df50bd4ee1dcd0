/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: tests/test_cascade.cpp
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

#include "csr3d/cascade.hpp"
#include "csr3d/error.hpp"
#include "csr3d/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace csr3d;

namespace {

const Dataset& head_train()
{
    static const Dataset d = split(generate_dataset(fixture::small_head(), fixture::small_config(32)), 0.5, 1).first;
    return d;
}

const Dataset& head_test()
{
    static const Dataset d = split(generate_dataset(fixture::small_head(), fixture::small_config(32)), 0.5, 1).second;
    return d;
}

const std::pair<CascadeModel, TrainReport>& head_cascade()
{
    static const auto trained = train_cascade(head_train(), TrainConfig{});
    return trained;
}

Eigen::MatrixXd with_bias_row(Eigen::MatrixXd m)
{
    m.row(m.rows() - 1).setOnes();
    return m;
}

double mean_vertex_error(const Shape3D& a, const Shape3D& b)
{
    return (a.vertices() - b.vertices()).rowwise().norm().mean();
}

} // namespace

TEST_SUITE("init_state")
{
    TEST_CASE("single frontal-neutral sample is the mean")
    {
        const auto m = fixture::linear_model(30, 6, 3, 1);
        const Dataset d = fixture::linear_dataset(m, 10, 2);
        const InitialState s = init_state(d);
        CHECK(s.mean_shape.vertices() == d.samples[0].shape.vertices());
        CHECK(s.mean_landmarks.points() == d.samples[0].landmarks.points());
    }

    TEST_CASE("mirrored pair averages to the midpoint")
    {
        const auto m = fixture::linear_model(30, 6, 3, 1);
        Dataset d = fixture::linear_dataset(m, 1, 2);
        VertexMatrix mirrored = d.samples[0].shape.vertices();
        mirrored.col(0) *= -1.0;
        Sample twin = d.samples[0];
        twin.shape = Shape3D(mirrored);
        d.samples.push_back(twin);
        const InitialState s = init_state(d);
        CHECK(s.mean_shape.vertices().col(0).cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.mean_shape.vertices().rightCols(2) == d.samples[0].shape.vertices().rightCols(2));
    }

    TEST_CASE("camera scale of noiseless generated data")
    {
        const Dataset& d = head_train();
        CHECK(std::abs(init_state(d).camera.scale() - d.camera_scale) < 1e-10);
    }

    TEST_CASE("landmark mean counts only visible observations")
    {
        const auto m = fixture::linear_model(30, 6, 3, 1);
        Dataset d = fixture::linear_dataset(m, 2, 2);
        d.samples[1].frontal_neutral = true;
        VisibilityMask mask(6, true);
        mask[2] = false;
        d.samples[1].landmarks = LandmarkSet2D(d.samples[1].landmarks.points(), mask);
        const InitialState s = init_state(d);
        CHECK(s.mean_landmarks.points().row(2) == d.samples[0].landmarks.points().row(2));
        const Eigen::RowVector2d expected =
            0.5 * (d.samples[0].landmarks.points().row(3) + d.samples[1].landmarks.points().row(3));
        CHECK((s.mean_landmarks.points().row(3) - expected).norm() < 1e-12);
    }

    TEST_CASE("no frontal-neutral sample")
    {
        const auto m = fixture::linear_model(30, 6, 3, 1);
        Dataset d = fixture::linear_dataset(m, 4, 2);
        d.samples[0].frontal_neutral = false;
        CHECK_THROWS_AS(init_state(d), InitializationError);
    }
}

TEST_SUITE("solve_stage")
{
    TEST_CASE("delta shapes equal to delta landmarks give the identity")
    {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> g(0.0, 1.0);
        Eigen::MatrixXd du(7, 7);
        for (Eigen::Index i = 0; i < du.size(); ++i)
        {
            du.data()[i] = g(rng);
        }
        du = with_bias_row(du);
        const StageSolution s = solve_stage(du, du, 0.0);
        CHECK_FALSE(s.used_fallback);
        CHECK((s.stage.weights - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("one vertex, one landmark, three samples")
    {
        const Eigen::MatrixXd du = with_bias_row((Eigen::MatrixXd(3, 3) << 1.5, -0.2, 0.7, 0.3, 2.0, -1.1, 0, 0, 0)
                                                     .finished());
        const Eigen::MatrixXd ds = (Eigen::MatrixXd(3, 3) << 0.4, -1.0, 2.2, 1.0, 0.5, 0.1, -0.3, 0.9, 1.7).finished();
        const StageSolution s = solve_stage(ds, du, 0.0);
        CHECK((s.stage.weights - oracle::pseudo_inverse_regressor(ds, du)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((s.stage.weights - oracle::normal_equation_regressor(ds, du, 0.0)).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("ridge solution matches the normal equations")
    {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> g(0.0, 1.0);
        Eigen::MatrixXd du(9, 40);
        Eigen::MatrixXd ds(12, 40);
        for (Eigen::Index i = 0; i < du.size(); ++i)
        {
            du.data()[i] = g(rng);
        }
        for (Eigen::Index i = 0; i < ds.size(); ++i)
        {
            ds.data()[i] = g(rng);
        }
        du = with_bias_row(du);
        const StageSolution s = solve_stage(ds, du, 2.5);
        CHECK(s.ridge == 2.5);
        CHECK((s.stage.weights - oracle::normal_equation_regressor(ds, du, 2.5)).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("a huge ridge drives the weights to zero")
    {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> g(0.0, 1.0);
        Eigen::MatrixXd du(5, 20);
        Eigen::MatrixXd ds(6, 20);
        for (Eigen::Index i = 0; i < du.size(); ++i)
        {
            du.data()[i] = g(rng);
        }
        for (Eigen::Index i = 0; i < ds.size(); ++i)
        {
            ds.data()[i] = g(rng);
        }
        du = with_bias_row(du);
        double previous = std::numeric_limits<double>::infinity();
        for (double ridge : {1e2, 1e6, 1e10, 1e14})
        {
            const double size = solve_stage(ds, du, ridge).stage.weights.cwiseAbs().maxCoeff();
            CHECK(size < previous);
            previous = size;
        }
        CHECK(previous < 1e-12);
    }

    TEST_CASE("default ridge follows the Gram trace")
    {
        const Eigen::MatrixXd g = Eigen::Vector3d(2.0, 4.0, 6.0).asDiagonal();
        CHECK(default_ridge(g) == doctest::Approx(1e-8 * 12.0 / 3.0).epsilon(1e-15));
    }

    TEST_CASE("singular Gram matrix without fallback names the dimensions")
    {
        std::mt19937_64 rng(6);
        std::normal_distribution<double> g(0.0, 1.0);
        Eigen::MatrixXd du(5, 20);
        for (Eigen::Index i = 0; i < du.size(); ++i)
        {
            du.data()[i] = g(rng);
        }
        du = with_bias_row(du);
        du.row(1).setZero();
        const Eigen::MatrixXd ds = Eigen::MatrixXd::Ones(3, 20);
        try
        {
            solve_stage(ds, du, 0.0, false);
            FAIL("expected a rank deficiency");
        }
        catch (const RankDeficiencyError& e)
        {
            const auto& dims = e.dimensions();
            CHECK(std::find(dims.begin(), dims.end(), 1u) != dims.end());
            CHECK(std::string(e.what()).find("v0") != std::string::npos);
        }
        const StageSolution s = solve_stage(ds, du, 0.0, true);
        CHECK(s.used_fallback);
        CHECK(s.rank == 4);
        CHECK(s.stage.weights.col(1).isZero(0.0));
        CHECK((s.stage.weights - oracle::pseudo_inverse_regressor(ds, du)).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("too few samples without a ridge")
    {
        const Eigen::MatrixXd du = with_bias_row(Eigen::MatrixXd::Random(5, 4));
        CHECK_THROWS_AS(solve_stage(Eigen::MatrixXd::Ones(3, 4), du, 0.0), RankDeficiencyError);
        CHECK_NOTHROW(solve_stage(Eigen::MatrixXd::Ones(3, 4), du, 1e-3));
    }

    TEST_CASE("malformed inputs")
    {
        const Eigen::MatrixXd du = with_bias_row(Eigen::MatrixXd::Random(5, 10));
        CHECK_THROWS_AS(solve_stage(Eigen::MatrixXd::Ones(3, 9), du, 1.0), StructuralError);
        CHECK_THROWS_AS(solve_stage(Eigen::MatrixXd::Ones(3, 10), Eigen::MatrixXd::Ones(4, 10), 1.0), StructuralError);
        CHECK_THROWS_AS(solve_stage(Eigen::MatrixXd::Ones(3, 10), Eigen::MatrixXd::Zero(5, 10), 1.0), ValidationError);
        CHECK_THROWS_AS(solve_stage(Eigen::MatrixXd::Ones(3, 10), du, -1.0), ValidationError);
    }
}

TEST_SUITE("train_cascade")
{
    TEST_CASE("exact linear model is recovered in one stage")
    {
        const auto m = fixture::linear_model(60, 12, 6, 7);
        const Dataset train = fixture::linear_dataset(m, 80, 8);
        TrainConfig config;
        config.stages = 1;
        config.ridge = 0.0;
        const auto [model, report] = train_cascade(train, config);
        CHECK(report.fallback_per_stage[0]);

        for (const auto& s : train.samples)
        {
            CHECK(mean_vertex_error(predict(model, s.landmarks), s.shape) < 1e-6);
        }
        const Dataset held_out = fixture::linear_dataset(m, 20, 9);
        for (const auto& s : held_out.samples)
        {
            CHECK(mean_vertex_error(predict(model, s.landmarks), s.shape) < 1e-6);
        }

        // Independent full-dataset least squares on the same deviations.
        const auto n3 = static_cast<Eigen::Index>(3 * train.vertex_count());
        const auto dims = static_cast<Eigen::Index>(2 * train.landmark_count() + 1);
        const auto count = static_cast<Eigen::Index>(train.size());
        Eigen::MatrixXd ds(n3, count);
        Eigen::MatrixXd du(dims, count);
        const Shape3D& mean = train.samples[0].shape;
        for (Eigen::Index i = 0; i < count; ++i)
        {
            const auto& s = train.samples[static_cast<std::size_t>(i)];
            for (Eigen::Index r = 0; r < n3; ++r)
            {
                ds(r, i) = s.shape.flat()[static_cast<std::size_t>(r)] - mean.flat()[static_cast<std::size_t>(r)];
            }
            for (std::size_t j = 0; j < train.landmark_count(); ++j)
            {
                const auto v = mean.vertex(train.landmark_spec.indices[j]);
                du(2 * static_cast<Eigen::Index>(j), i) = s.landmarks.points()(static_cast<Eigen::Index>(j), 0) -
                                                          m.camera_scale * v.x();
                du(2 * static_cast<Eigen::Index>(j) + 1, i) =
                    s.landmarks.points()(static_cast<Eigen::Index>(j), 1) - m.camera_scale * v.y();
            }
            du(dims - 1, i) = 1.0;
        }
        const Eigen::MatrixXd expected = oracle::pseudo_inverse_regressor(ds, du);
        const double scale = expected.cwiseAbs().maxCoeff();
        CHECK((model.stages[0].weights - expected).cwiseAbs().maxCoeff() < 1e-8 * scale);
    }

    TEST_CASE("objective never increases")
    {
        const auto& [model, report] = head_cascade();
        REQUIRE(report.objective_per_stage.size() == 6);
        REQUIRE(report.residual_per_stage.size() == 5);
        for (std::size_t k = 1; k < report.objective_per_stage.size(); ++k)
        {
            CHECK(report.objective_per_stage[k] <= report.objective_per_stage[k - 1] * (1.0 + 1e-9));
            CHECK(report.residual_per_stage[k - 1] == report.objective_per_stage[k]);
        }
        CHECK(report.sample_count == head_train().size());
        CHECK(model.stage_count() == 5);
        CHECK_NOTHROW(model.validate());
    }

    TEST_CASE("objective never increases under disturbed landmarks")
    {
        TrainConfig config;
        config.noise_std = 10.0;
        config.noise_replicas = 2;
        config.seed = 3;
        const auto [model, report] = train_cascade(head_train(), config);
        CHECK(report.sample_count == 2 * head_train().size());
        for (std::size_t k = 1; k < report.objective_per_stage.size(); ++k)
        {
            CHECK(report.objective_per_stage[k] <= report.objective_per_stage[k - 1] * (1.0 + 1e-9));
        }
    }

    TEST_CASE("same data and configuration give a bit-identical model")
    {
        TrainConfig config;
        config.stages = 3;
        config.noise_std = 5.0;
        config.noise_replicas = 2;
        config.seed = 9;
        const auto [a, ra] = train_cascade(head_train(), config);
        const auto [b, rb] = train_cascade(head_train(), config);
        REQUIRE(a.stage_count() == b.stage_count());
        for (std::size_t k = 0; k < a.stage_count(); ++k)
        {
            CHECK(a.stages[k].weights == b.stages[k].weights);
        }
        CHECK(a.mean_shape.vertices() == b.mean_shape.vertices());
        CHECK(a.camera.scale() == b.camera.scale());
        CHECK(a.train_fingerprint == b.train_fingerprint);
        CHECK(ra.objective_per_stage == rb.objective_per_stage);
        CHECK(ra.ridge_per_stage == rb.ridge_per_stage);

        config.seed = 10;
        const auto c = train_cascade(head_train(), config).first;
        CHECK(c.train_fingerprint != a.train_fingerprint);
        CHECK(c.stages[0].weights != a.stages[0].weights);
    }

    TEST_CASE("rows are separable across vertex subsets")
    {
        const Dataset& full = head_train();
        std::vector<std::uint32_t> keep(full.landmark_spec.indices.begin(), full.landmark_spec.indices.end());
        for (std::uint32_t v = 0; v < full.vertex_count(); v += 3)
        {
            keep.push_back(v);
        }
        std::sort(keep.begin(), keep.end());
        keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
        const Dataset part = restrict_vertices(full, keep);

        TrainConfig config;
        config.stages = 3;
        const auto& big = head_cascade().first;
        const auto small = train_cascade(part, config).first;
        for (std::size_t k = 0; k < small.stage_count(); ++k)
        {
            double worst = 0.0;
            for (std::size_t i = 0; i < keep.size(); ++i)
            {
                for (int c = 0; c < 3; ++c)
                {
                    const auto r_small = static_cast<Eigen::Index>(3 * i + c);
                    const auto r_big = static_cast<Eigen::Index>(3 * keep[i] + c);
                    worst = std::max(worst, (small.stages[k].weights.row(r_small) -
                                             big.stages[k].weights.row(r_big)).cwiseAbs().maxCoeff());
                }
            }
            CHECK(worst < 1e-10);
        }
        CHECK(small.camera.scale() == big.camera.scale());
    }

    TEST_CASE("configuration errors")
    {
        TrainConfig c;
        c.stages = 0;
        CHECK_THROWS_AS(train_cascade(head_train(), c), ValidationError);
        c = TrainConfig{};
        c.noise_std = -1.0;
        CHECK_THROWS_AS(c.validate(), ValidationError);
        c = TrainConfig{};
        c.noise_replicas = 0;
        CHECK_THROWS_AS(c.validate(), ValidationError);
        c = TrainConfig{};
        c.ridge = -1e-3;
        CHECK_THROWS_AS(c.validate(), ValidationError);
        CHECK(TrainConfig{}.hash() == TrainConfig{}.hash());
        c = TrainConfig{};
        c.stages = 6;
        CHECK(c.hash() != TrainConfig{}.hash());
    }

    TEST_CASE("too few samples without a ridge")
    {
        const auto m = fixture::linear_model(40, 10, 3, 1);
        const Dataset d = fixture::linear_dataset(m, 15, 2);
        TrainConfig config;
        config.ridge = 0.0;
        CHECK_THROWS_AS(train_cascade(d, config), RankDeficiencyError);
    }
}

TEST_SUITE("predict")
{
    TEST_CASE("all-zero stages return the mean shape")
    {
        CascadeModel model = head_cascade().first;
        for (auto& s : model.stages)
        {
            s.weights.setZero();
        }
        const Shape3D out = predict(model, head_test().samples[5].landmarks);
        CHECK(out.vertices() == model.mean_shape.vertices());
    }

    TEST_CASE("zero-deviation fixpoint")
    {
        CascadeModel model = head_cascade().first;
        for (auto& s : model.stages)
        {
            s.weights.col(s.weights.cols() - 1).setZero();
        }
        const auto l = static_cast<Eigen::Index>(model.landmark_count());
        PointMatrix points(l, 2);
        for (Eigen::Index j = 0; j < l; ++j)
        {
            const auto v = model.mean_shape.vertex(model.landmark_spec.indices[static_cast<std::size_t>(j)]);
            points(j, 0) = model.camera.scale() * v.x();
            points(j, 1) = model.camera.scale() * v.y();
        }
        const Shape3D out = predict(model, LandmarkSet2D::all_visible(points));
        CHECK(out.vertices() == model.mean_shape.vertices());
    }

    TEST_CASE("invisible slots are inert")
    {
        const auto& model = head_cascade().first;
        const Sample* profile = nullptr;
        for (const auto& s : head_test().samples)
        {
            if (s.landmarks.visible_count() < s.landmarks.size())
            {
                profile = &s;
                break;
            }
        }
        REQUIRE(profile != nullptr);
        PointMatrix garbage = profile->landmarks.points();
        for (std::size_t j = 0; j < garbage.rows(); ++j)
        {
            if (!profile->landmarks.visible(j))
            {
                garbage.row(static_cast<Eigen::Index>(j)) << 1e6, -3e5;
            }
        }
        const LandmarkSet2D noisy(garbage, profile->landmarks.visibility());
        CHECK(predict(model, noisy).vertices() == predict(model, profile->landmarks).vertices());
    }

    TEST_CASE("batch prediction is bit-identical under every kernel set")
    {
        const auto& model = head_cascade().first;
        std::vector<LandmarkSet2D> inputs;
        for (const auto& s : head_test().samples)
        {
            inputs.push_back(s.landmarks);
        }
        for (kernels::Isa isa : {kernels::Isa::Scalar, kernels::Isa::Avx2})
        {
            if (!kernels::isa_supported(isa))
            {
                continue;
            }
            kernels::ScopedIsa scope(isa);
            const auto batch = predict_batch(model, inputs);
            REQUIRE(batch.size() == inputs.size());
            for (std::size_t i = 0; i < inputs.size(); ++i)
            {
                REQUIRE(batch[i].vertices() == predict(model, inputs[i]).vertices());
            }
        }
    }

    TEST_CASE("scalar and avx2 predictions agree")
    {
        if (!kernels::isa_supported(kernels::Isa::Avx2))
        {
            return;
        }
        const auto& model = head_cascade().first;
        const auto& input = head_test().samples[7].landmarks;
        Shape3D scalar;
        Shape3D vector;
        {
            kernels::ScopedIsa scope(kernels::Isa::Scalar);
            scalar = predict(model, input);
        }
        {
            kernels::ScopedIsa scope(kernels::Isa::Avx2);
            vector = predict(model, input);
        }
        CHECK((scalar.vertices() - vector.vertices()).cwiseAbs().maxCoeff() <
              1e-10 * (1.0 + scalar.vertices().cwiseAbs().maxCoeff()));
    }

    TEST_CASE("reconstruction beats the mean shape")
    {
        const auto& model = head_cascade().first;
        std::vector<double> cascade;
        std::vector<double> baseline;
        for (const auto& s : head_test().samples)
        {
            cascade.push_back(mean_vertex_error(predict(model, s.landmarks), s.shape));
            baseline.push_back(mean_vertex_error(model.mean_shape, s.shape));
        }
        const auto median = [](std::vector<double> v) {
            std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
            return v[v.size() / 2];
        };
        CHECK(median(cascade) < 0.05 * median(baseline));
    }

    TEST_CASE("input errors")
    {
        const auto& model = head_cascade().first;
        const auto& input = head_test().samples[0].landmarks;
        CHECK_THROWS_AS(predict(model, input.select(std::vector<std::size_t>{0, 1, 2, 3})), StructuralError);
        PointMatrix bad = input.points();
        bad(20, 0) = std::nan("");
        CHECK_THROWS_AS(LandmarkSet2D(bad, input.visibility()), ValidationError);
    }
}

TEST_SUITE("estimate_visibility_for_input")
{
    TEST_CASE("frontal input sees every landmark")
    {
        const auto& model = head_cascade().first;
        const Sample* frontal = nullptr;
        for (const auto& s : head_test().samples)
        {
            if (s.frontal_neutral)
            {
                frontal = &s;
                break;
            }
        }
        REQUIRE(frontal != nullptr);
        const VisibilityMask mask = estimate_visibility_for_input(model, frontal->landmarks);
        CHECK(std::count(mask.begin(), mask.end(), true) == 68);
    }

    TEST_CASE("mask is the set of normals facing the camera")
    {
        CascadeModel model = head_cascade().first;
        model.landmark_normals.col(2).head(10).array() *= -1.0;
        model.landmark_normals(10, 2) = 0.0;
        const VisibilityMask mask = estimate_visibility_for_input(model, head_test().samples[3].landmarks);
        for (std::size_t j = 0; j < mask.size(); ++j)
        {
            CHECK(mask[j] == (model.landmark_normals(static_cast<Eigen::Index>(j), 2) > 0.0));
        }
    }

    TEST_CASE("intersection with a partial detector mask")
    {
        const auto& model = head_cascade().first;
        const auto& input = head_test().samples[2].landmarks;
        VisibilityMask detector(68, false);
        for (std::size_t j = 0; j < 40; ++j)
        {
            detector[j] = input.visible(j);
        }
        const LandmarkSet2D detected(input.points(), detector);
        const VisibilityMask combined = mask_to_reference(detected, estimate_visibility_for_input(model, detected))
                                            .visibility();
        CHECK(std::count(combined.begin(), combined.end(), true) <= 40);
    }

    TEST_CASE("model without normals")
    {
        CascadeModel model = head_cascade().first;
        model.landmark_normals.resize(0, 3);
        CHECK_THROWS_AS(estimate_visibility_for_input(model, head_test().samples[0].landmarks), StructuralError);
    }
}

TEST_SUITE("disturb_landmarks")
{
    TEST_CASE("zero sigma is the identity")
    {
        std::mt19937_64 rng(1);
        const auto& input = head_test().samples[4].landmarks;
        const LandmarkSet2D out = disturb_landmarks(input, 0.0, rng);
        CHECK(out.points() == input.points());
        CHECK(out.visibility() == input.visibility());
    }

    TEST_CASE("invisible entries stay at the origin")
    {
        std::mt19937_64 rng(2);
        PointMatrix p = PointMatrix::Constant(6, 2, 10.0);
        const LandmarkSet2D input(p, {true, false, true, false, false, true});
        const LandmarkSet2D out = disturb_landmarks(input, 50.0, rng);
        for (std::size_t j = 0; j < 6; ++j)
        {
            if (!input.visible(j))
            {
                CHECK(out.points().row(static_cast<Eigen::Index>(j)).isZero(0.0));
            }
            else
            {
                CHECK(out.points()(static_cast<Eigen::Index>(j), 0) != 10.0);
            }
        }
    }

    TEST_CASE("sample standard deviation matches sigma")
    {
        std::mt19937_64 rng(3);
        const LandmarkSet2D input = LandmarkSet2D::all_visible(PointMatrix::Constant(1, 2, 4.0));
        const double sigma = 25.0;
        const int trials = 100000;
        double sum = 0.0;
        double sum_sq = 0.0;
        for (int t = 0; t < trials; ++t)
        {
            const double d = disturb_landmarks(input, sigma, rng).points()(0, 0) - 4.0;
            sum += d;
            sum_sq += d * d;
        }
        const double mean = sum / trials;
        const double stdev = std::sqrt(sum_sq / trials - mean * mean);
        CHECK(std::abs(stdev - sigma) < 0.02 * sigma);
        CHECK(std::abs(mean) < 5.0 * sigma / std::sqrt(static_cast<double>(trials)));
    }

    TEST_CASE("negative sigma")
    {
        std::mt19937_64 rng(4);
        CHECK_THROWS_AS(disturb_landmarks(head_test().samples[0].landmarks, -1.0, rng), ValidationError);
    }
}
