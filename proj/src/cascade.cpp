/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: src/cascade.cpp
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
#include "csr3d/cascade.hpp"
#include "csr3d/error.hpp"
#include "csr3d/fnv1a.hpp"
#include "csr3d/kernels.hpp"

#include "Eigen/Dense"

#include <chrono>
#include <cmath>
#include <string>

namespace csr3d {

namespace {

constexpr double min_reciprocal_condition = 1e-12;
constexpr double fallback_rank_threshold = 1e-10;

std::mt19937_64 replica_stream(std::uint64_t seed, std::uint64_t sample, std::uint64_t replica)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(sample >> 32),
                      static_cast<std::uint32_t>(replica), 0x7e57u};
    return std::mt19937_64(seq);
}

std::vector<std::size_t> all_dimensions(Eigen::Index rows)
{
    std::vector<std::size_t> dims(static_cast<std::size_t>(rows));
    for (std::size_t i = 0; i < dims.size(); ++i)
    {
        dims[i] = i;
    }
    return dims;
}

std::string describe_dimensions(const std::vector<std::size_t>& dims, Eigen::Index rows)
{
    const auto bias = static_cast<std::size_t>(rows - 1);
    std::string out;
    for (std::size_t i = 0; i < dims.size() && i < 12; ++i)
    {
        if (!out.empty())
        {
            out += ", ";
        }
        if (dims[i] == bias)
        {
            out += "bias";
        }
        else
        {
            out += (dims[i] % 2 == 0 ? "u" : "v") + std::to_string(dims[i] / 2);
        }
    }
    if (dims.size() > 12)
    {
        out += ", ... (" + std::to_string(dims.size()) + " total)";
    }
    return out;
}

void check_model_input(const CascadeModel& model, const LandmarkSet2D& landmarks)
{
    if (landmarks.size() != model.landmark_count())
    {
        throw StructuralError("predict: model expects " + std::to_string(model.landmark_count()) +
                              " landmarks, got " + std::to_string(landmarks.size()));
    }
}

// The landmark deviations [U* - U^{k-1}; 1] of every stage. Only landmark
// rows of the running estimate are advanced here; each is updated with the
// same dot() the full pass uses, so the two agree bit for bit.
std::vector<Eigen::VectorXd> stage_inputs(const CascadeModel& model, const LandmarkSet2D& landmarks)
{
    const std::size_t l = model.landmark_count();
    const auto cols = static_cast<Eigen::Index>(2 * l + 1);
    const double f = model.camera.scale();
    VertexMatrix current = model.mean_shape.subset(model.landmark_spec.indices).vertices();
    const auto& target = landmarks.points();

    std::vector<Eigen::VectorXd> inputs;
    inputs.reserve(model.stage_count());
    for (std::size_t k = 0; k < model.stage_count(); ++k)
    {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
        for (std::size_t j = 0; j < l; ++j)
        {
            if (landmarks.visible(j))
            {
                const auto r = static_cast<Eigen::Index>(j);
                x(2 * r) = target(r, 0) - f * current(r, 0);
                x(2 * r + 1) = target(r, 1) - f * current(r, 1);
            }
        }
        x(cols - 1) = 1.0;

        if (k + 1 < model.stage_count())
        {
            const auto& w = model.stages[k].weights;
            const std::span<const double> xs(x.data(), static_cast<std::size_t>(cols));
            for (std::size_t j = 0; j < l; ++j)
            {
                for (int c = 0; c < 3; ++c)
                {
                    const auto row = static_cast<Eigen::Index>(3 * model.landmark_spec.indices[j] + c);
                    current(static_cast<Eigen::Index>(j), c) +=
                        kernels::dot({w.data() + row * cols, static_cast<std::size_t>(cols)}, xs);
                }
            }
        }
        inputs.push_back(std::move(x));
    }
    return inputs;
}

} // namespace

void CascadeModel::validate() const
{
    const std::size_t n = vertex_count();
    const std::size_t l = landmark_count();
    if (stages.empty())
    {
        throw StructuralError("CascadeModel: at least one stage is required");
    }
    landmark_spec.validate(n);
    if (mean_landmarks.size() != l)
    {
        throw StructuralError("CascadeModel: mean landmarks have length " + std::to_string(mean_landmarks.size()) +
                              ", expected " + std::to_string(l));
    }
    for (std::size_t k = 0; k < stages.size(); ++k)
    {
        const auto& w = stages[k].weights;
        if (static_cast<std::size_t>(w.rows()) != 3 * n || static_cast<std::size_t>(w.cols()) != 2 * l + 1)
        {
            throw StructuralError("CascadeModel: stage " + std::to_string(k) + " is " + std::to_string(w.rows()) +
                                  " x " + std::to_string(w.cols()) + ", expected " + std::to_string(3 * n) + " x " +
                                  std::to_string(2 * l + 1));
        }
        if (!w.allFinite())
        {
            throw ValidationError("CascadeModel: stage " + std::to_string(k) + " has non-finite weights");
        }
    }
    if (landmark_normals.rows() != 0 && static_cast<std::size_t>(landmark_normals.rows()) != l)
    {
        throw StructuralError("CascadeModel: landmark normals have " + std::to_string(landmark_normals.rows()) +
                              " rows, expected " + std::to_string(l));
    }
    if (!topology.empty())
    {
        topology.validate(n);
    }
}

void TrainConfig::validate() const
{
    if (stages < 1)
    {
        throw ValidationError("TrainConfig: at least one stage is required");
    }
    if (ridge && !(*ridge >= 0.0 && std::isfinite(*ridge)))
    {
        throw ValidationError("TrainConfig: ridge must be finite and non-negative");
    }
    if (!(noise_std >= 0.0 && std::isfinite(noise_std)))
    {
        throw ValidationError("TrainConfig: noise_std must be finite and non-negative");
    }
    if (noise_replicas < 1)
    {
        throw ValidationError("TrainConfig: noise_replicas must be at least 1");
    }
}

std::uint64_t TrainConfig::hash() const
{
    Fnv1a64 h;
    h.update_value(static_cast<std::uint64_t>(stages));
    h.update_value(static_cast<std::uint8_t>(ridge.has_value()));
    h.update_value(ridge.value_or(0.0));
    h.update_value(noise_std);
    h.update_value(static_cast<std::uint64_t>(noise_replicas));
    h.update_value(seed);
    h.update_value(static_cast<std::uint8_t>(rank_fallback));
    return h.digest();
}

InitialState init_state(const Dataset& training_set)
{
    const std::size_t n = training_set.vertex_count();
    const std::size_t l = training_set.landmark_count();
    VertexMatrix shape_sum = VertexMatrix::Zero(static_cast<Eigen::Index>(n), 3);
    PointMatrix landmark_sum = PointMatrix::Zero(static_cast<Eigen::Index>(l), 2);
    std::vector<std::size_t> landmark_hits(l, 0);
    std::size_t count = 0;
    for (const auto& s : training_set.samples)
    {
        if (!s.frontal_neutral)
        {
            continue;
        }
        shape_sum += s.shape.vertices();
        for (std::size_t j = 0; j < l; ++j)
        {
            if (s.landmarks.visible(j))
            {
                landmark_sum.row(static_cast<Eigen::Index>(j)) += s.landmarks.points().row(static_cast<Eigen::Index>(j));
                ++landmark_hits[j];
            }
        }
        ++count;
    }
    if (count == 0)
    {
        throw InitializationError("init_state: the training set has no frontal-neutral sample");
    }
    VisibilityMask seen(l);
    for (std::size_t j = 0; j < l; ++j)
    {
        seen[j] = landmark_hits[j] > 0;
        if (seen[j])
        {
            landmark_sum.row(static_cast<Eigen::Index>(j)) /= static_cast<double>(landmark_hits[j]);
        }
    }
    Shape3D mean_shape(shape_sum / static_cast<double>(count));
    LandmarkSet2D mean_landmarks(std::move(landmark_sum), std::move(seen));
    WeakPerspectiveCamera camera =
        estimate_camera(mean_landmarks, mean_shape.subset(training_set.landmark_spec.indices).vertices());
    return {std::move(mean_shape), std::move(mean_landmarks), camera};
}

double default_ridge(const Eigen::MatrixXd& gram)
{
    return 1e-8 * gram.trace() / static_cast<double>(gram.rows());
}

StageSolution solve_stage(const Eigen::MatrixXd& delta_shapes, const Eigen::MatrixXd& delta_landmarks,
                          std::optional<double> ridge, bool allow_fallback)
{
    const Eigen::Index dims = delta_landmarks.rows();
    const Eigen::Index samples = delta_landmarks.cols();
    if (delta_shapes.cols() != samples)
    {
        throw StructuralError("solve_stage: " + std::to_string(delta_shapes.cols()) + " shape columns but " +
                              std::to_string(samples) + " landmark columns");
    }
    if (dims < 1 || dims % 2 == 0)
    {
        throw StructuralError("solve_stage: landmark deviations need 2l + 1 rows, got " + std::to_string(dims));
    }
    if ((delta_landmarks.row(dims - 1).array() != 1.0).any())
    {
        throw ValidationError("solve_stage: the last landmark row must be the constant 1 bias input");
    }

    const Eigen::MatrixXd gram = delta_landmarks * delta_landmarks.transpose();
    StageSolution out;
    out.ridge = ridge.value_or(default_ridge(gram));
    if (!(out.ridge >= 0.0 && std::isfinite(out.ridge)))
    {
        throw ValidationError("solve_stage: ridge must be finite and non-negative");
    }
    if (out.ridge == 0.0 && samples < dims)
    {
        throw RankDeficiencyError("solve_stage: " + std::to_string(samples) + " samples cannot determine " +
                                      std::to_string(dims) + " regressor columns without a ridge term",
                                  all_dimensions(dims));
    }

    Eigen::MatrixXd regularized = gram;
    regularized.diagonal().array() += out.ridge;
    const Eigen::LLT<Eigen::MatrixXd> llt(regularized);
    if (llt.info() == Eigen::Success && llt.rcond() >= min_reciprocal_condition)
    {
        const Eigen::MatrixXd cross = delta_shapes * delta_landmarks.transpose();
        out.stage.weights = llt.solve(cross.transpose()).transpose();
        out.rank = static_cast<std::size_t>(dims);
        return out;
    }

    if (!allow_fallback)
    {
        std::vector<std::size_t> offending;
        for (Eigen::Index r = 0; r < dims; ++r)
        {
            if (delta_landmarks.row(r).isZero(0.0))
            {
                offending.push_back(static_cast<std::size_t>(r));
            }
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(regularized);
        qr.setThreshold(min_reciprocal_condition);
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index i = qr.rank(); i < dims; ++i)
        {
            const auto d = static_cast<std::size_t>(perm(i));
            if (std::find(offending.begin(), offending.end(), d) == offending.end())
            {
                offending.push_back(d);
            }
        }
        std::sort(offending.begin(), offending.end());
        const std::string message = "solve_stage: landmark Gram matrix is numerically singular; unresolved dimensions: " +
                                    describe_dimensions(offending, dims);
        throw RankDeficiencyError(message, std::move(offending));
    }

    // min |dS^T - dU^T W^T|^2 + ridge |W|^2 as one stacked least-squares problem.
    Eigen::MatrixXd design(samples + dims, dims);
    design.topRows(samples) = delta_landmarks.transpose();
    design.bottomRows(dims) = std::sqrt(out.ridge) * Eigen::MatrixXd::Identity(dims, dims);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(samples + dims, delta_shapes.rows());
    rhs.topRows(samples) = delta_shapes.transpose();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(fallback_rank_threshold);
    cod.compute(design);
    out.stage.weights = cod.solve(rhs).transpose();
    out.rank = static_cast<std::size_t>(cod.rank());
    out.used_fallback = true;
    return out;
}

std::pair<CascadeModel, TrainReport> train_cascade(const Dataset& training_set, const TrainConfig& config)
{
    config.validate();
    training_set.validate();
    if (training_set.samples.empty())
    {
        throw ValidationError("train_cascade: the training set is empty");
    }
    const std::size_t n = training_set.vertex_count();
    const std::size_t l = training_set.landmark_count();
    const auto& spec = training_set.landmark_spec;

    InitialState init = init_state(training_set);
    CascadeModel model;
    model.mean_shape = init.mean_shape;
    model.mean_landmarks = init.mean_landmarks;
    model.camera = init.camera;
    model.landmark_spec = spec;
    model.topology = training_set.topology;
    if (!training_set.topology.empty())
    {
        const VertexMatrix normals = vertex_normals(model.mean_shape, training_set.topology);
        model.landmark_normals.resize(static_cast<Eigen::Index>(l), 3);
        for (std::size_t j = 0; j < l; ++j)
        {
            model.landmark_normals.row(static_cast<Eigen::Index>(j)) = normals.row(spec.indices[j]);
        }
    }

    // One regression column per sample, or per disturbed replica of a sample.
    const bool disturbed = config.noise_std > 0.0;
    const std::size_t replicas = disturbed ? config.noise_replicas : 1;
    const std::size_t columns = training_set.size() * replicas;
    const auto m = static_cast<Eigen::Index>(columns);
    const auto rows3 = static_cast<Eigen::Index>(3 * n);
    const auto dims = static_cast<Eigen::Index>(2 * l + 1);
    const double f = model.camera.scale();

    Eigen::MatrixXd residual(rows3, m);                                    // S* - S^{k-1}
    Eigen::MatrixXd target_xy(2 * static_cast<Eigen::Index>(l), m);        // (x, y) of S* at landmarks
    Eigen::MatrixXd observed(2 * static_cast<Eigen::Index>(l), m);         // U*, zero-filled
    std::vector<VisibilityMask> masks;
    masks.reserve(columns);

    const Eigen::Map<const Eigen::VectorXd> mean_flat(model.mean_shape.flat().data(), rows3);
    Eigen::Index c = 0;
    for (std::size_t i = 0; i < training_set.size(); ++i)
    {
        const Sample& s = training_set.samples[i];
        const Eigen::Map<const Eigen::VectorXd> truth(s.shape.flat().data(), rows3);
        for (std::size_t r = 0; r < replicas; ++r, ++c)
        {
            residual.col(c) = truth - mean_flat;
            LandmarkSet2D u = s.landmarks;
            if (disturbed)
            {
                auto rng = replica_stream(config.seed, i, r);
                u = disturb_landmarks(s.landmarks, config.noise_std, rng);
            }
            for (std::size_t j = 0; j < l; ++j)
            {
                const auto jr = static_cast<Eigen::Index>(j);
                target_xy(2 * jr, c) = s.shape.vertices()(spec.indices[j], 0);
                target_xy(2 * jr + 1, c) = s.shape.vertices()(spec.indices[j], 1);
                observed(2 * jr, c) = u.points()(jr, 0);
                observed(2 * jr + 1, c) = u.points()(jr, 1);
            }
            masks.push_back(u.visibility());
        }
    }

    TrainReport report;
    report.sample_count = columns;
    report.objective_per_stage.push_back(residual.squaredNorm());

    Eigen::MatrixXd deviation(dims, m);
    for (std::size_t k = 0; k < config.stages; ++k)
    {
        const auto start = std::chrono::steady_clock::now();
        for (Eigen::Index col = 0; col < m; ++col)
        {
            const auto& mask = masks[static_cast<std::size_t>(col)];
            for (std::size_t j = 0; j < l; ++j)
            {
                const auto jr = static_cast<Eigen::Index>(j);
                if (!mask[j])
                {
                    deviation(2 * jr, col) = 0.0;
                    deviation(2 * jr + 1, col) = 0.0;
                    continue;
                }
                const auto row = static_cast<Eigen::Index>(3 * spec.indices[j]);
                const double x = target_xy(2 * jr, col) - residual(row, col);
                const double y = target_xy(2 * jr + 1, col) - residual(row + 1, col);
                deviation(2 * jr, col) = observed(2 * jr, col) - f * x;
                deviation(2 * jr + 1, col) = observed(2 * jr + 1, col) - f * y;
            }
            deviation(dims - 1, col) = 1.0;
        }

        StageSolution sol = solve_stage(residual, deviation, config.ridge, config.rank_fallback);
        residual.noalias() -= sol.stage.weights * deviation;

        const double objective = residual.squaredNorm();
        report.objective_per_stage.push_back(objective);
        report.residual_per_stage.push_back(objective);
        report.ridge_per_stage.push_back(sol.ridge);
        report.fallback_per_stage.push_back(sol.used_fallback);
        model.stages.push_back(std::move(sol.stage));
        report.stage_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }

    Fnv1a64 fp;
    fp.update_value(config.hash());
    fp.update_value(training_set.seed);
    fp.update_value(static_cast<std::uint64_t>(training_set.size()));
    fp.update_value(static_cast<std::uint64_t>(n));
    fp.update_value(static_cast<std::uint64_t>(l));
    model.train_fingerprint = fp.digest();
    return {std::move(model), std::move(report)};
}

Shape3D predict(const CascadeModel& model, const LandmarkSet2D& landmarks)
{
    check_model_input(model, landmarks);
    const auto inputs = stage_inputs(model, landmarks);
    const auto flat = model.mean_shape.flat();
    std::vector<double> y(flat.begin(), flat.end());
    for (std::size_t k = 0; k < model.stage_count(); ++k)
    {
        const auto& w = model.stages[k].weights;
        kernels::gemv_accumulate({w.data(), static_cast<std::size_t>(w.size())},
                                 {inputs[k].data(), static_cast<std::size_t>(inputs[k].size())}, y);
    }
    return Shape3D::from_flat(y);
}

std::vector<Shape3D> predict_batch(const CascadeModel& model, std::span<const LandmarkSet2D> inputs)
{
    const std::size_t batch = inputs.size();
    if (batch == 0)
    {
        return {};
    }
    const std::size_t cols = 2 * model.landmark_count() + 1;
    const auto flat = model.mean_shape.flat();
    const std::size_t rows = flat.size();

    std::vector<std::vector<Eigen::VectorXd>> per_input;
    per_input.reserve(batch);
    for (const auto& in : inputs)
    {
        check_model_input(model, in);
        per_input.push_back(stage_inputs(model, in));
    }

    std::vector<double> y(batch * rows);
    for (std::size_t b = 0; b < batch; ++b)
    {
        std::copy(flat.begin(), flat.end(), y.begin() + static_cast<std::ptrdiff_t>(b * rows));
    }
    std::vector<double> x(batch * cols);
    for (std::size_t k = 0; k < model.stage_count(); ++k)
    {
        for (std::size_t b = 0; b < batch; ++b)
        {
            std::copy(per_input[b][k].data(), per_input[b][k].data() + cols,
                      x.begin() + static_cast<std::ptrdiff_t>(b * cols));
        }
        const auto& w = model.stages[k].weights;
        kernels::gemv_accumulate_batch({w.data(), static_cast<std::size_t>(w.size())}, cols, x, y, batch);
    }

    std::vector<Shape3D> out;
    out.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b)
    {
        out.push_back(Shape3D::from_flat({y.data() + b * rows, rows}));
    }
    return out;
}

VisibilityMask estimate_visibility_for_input(const CascadeModel& model, const LandmarkSet2D& detected)
{
    check_model_input(model, detected);
    if (static_cast<std::size_t>(model.landmark_normals.rows()) != model.landmark_count())
    {
        throw StructuralError("estimate_visibility_for_input: the model carries no landmark normals");
    }
    const WeakPerspectiveCamera coarse =
        estimate_camera(detected, model.mean_shape.subset(model.landmark_spec.indices).vertices());
    return landmark_visibility(model.landmark_normals, coarse);
}

LandmarkSet2D disturb_landmarks(const LandmarkSet2D& landmarks, double sigma, std::mt19937_64& rng)
{
    if (!(sigma >= 0.0 && std::isfinite(sigma)))
    {
        throw ValidationError("disturb_landmarks: sigma must be finite and non-negative");
    }
    if (sigma == 0.0)
    {
        return landmarks;
    }
    std::normal_distribution<double> noise(0.0, sigma);
    PointMatrix points = landmarks.points();
    for (std::size_t i = 0; i < landmarks.size(); ++i)
    {
        if (landmarks.visible(i))
        {
            const auto r = static_cast<Eigen::Index>(i);
            points(r, 0) += noise(rng);
            points(r, 1) += noise(rng);
        }
    }
    return LandmarkSet2D(std::move(points), landmarks.visibility());
}

} // namespace csr3d
