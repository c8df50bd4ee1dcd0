/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: src/synthdata.cpp
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
#include "csr3d/synthdata.hpp"
#include "csr3d/error.hpp"

#include "Eigen/Dense"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <unordered_set>

namespace csr3d {

namespace {

// Semi-axes of the head in mm: half-width, half-height, depth.
constexpr double head_a = 80.0;
constexpr double head_b = 115.0;
constexpr double head_c = 95.0;

// Support width of the random displacement bumps, mm.
constexpr double bump_width = 35.0;
constexpr int bumps_per_direction = 6;

// Total per-vertex RMS displacement of each basis, mm, independent of its rank.
constexpr double identity_rms_per_vertex = 4.0;
constexpr double expression_rms_per_vertex = 2.5;
constexpr double scale_decay = 0.85;

Eigen::VectorXd decaying_scales(Eigen::Index rank, double rms_per_vertex, std::size_t n)
{
    Eigen::VectorXd s(rank);
    for (Eigen::Index k = 0; k < rank; ++k)
    {
        s(k) = std::pow(scale_decay, static_cast<double>(k));
    }
    if (rank > 0)
    {
        s *= rms_per_vertex * std::sqrt(static_cast<double>(n)) / s.norm();
    }
    return s;
}

struct CanonicalLandmark
{
    double x;
    double y;
    Region region;
};

// Frontal 68-point layout in mm, face centred at the origin, y up.
// 0-16 jaw, 17-26 brows, 27-35 nose, 36-47 eyes, 48-67 mouth.
std::vector<CanonicalLandmark> canonical_layout()
{
    std::vector<CanonicalLandmark> out;
    out.reserve(68);
    for (int k = 0; k <= 16; ++k)
    {
        const double phi = k * std::numbers::pi / 16.0;
        const double x = (k == 8) ? 0.0 : -68.0 * std::cos(phi);
        out.push_back({x, 15.0 - 105.0 * std::sin(phi), Region::Other});
    }
    const std::array<std::array<double, 2>, 5> brow{{{-52, 44}, {-42, 49}, {-31, 51}, {-20, 50}, {-12, 46}}};
    for (const auto& p : brow)
    {
        out.push_back({p[0], p[1], Region::Eyes});
    }
    for (auto it = brow.rbegin(); it != brow.rend(); ++it)
    {
        out.push_back({-(*it)[0], (*it)[1], Region::Eyes});
    }
    const std::array<std::array<double, 2>, 9> nose{
        {{0, 34}, {0, 24}, {0, 14}, {0, 4}, {-14, -10}, {-7, -13}, {0, -15}, {7, -13}, {14, -10}}};
    for (const auto& p : nose)
    {
        out.push_back({p[0], p[1], Region::Nose});
    }
    const std::array<std::array<double, 2>, 12> eyes{{{-45.5, 30},
                                                      {-36, 35},
                                                      {-27, 35},
                                                      {-17.5, 30},
                                                      {-27, 25},
                                                      {-36, 25},
                                                      {17.5, 30},
                                                      {27, 35},
                                                      {36, 35},
                                                      {45.5, 30},
                                                      {36, 25},
                                                      {27, 25}}};
    for (const auto& p : eyes)
    {
        out.push_back({p[0], p[1], Region::Eyes});
    }
    const std::array<std::array<double, 2>, 20> mouth{{{-25, -45}, {-16, -38}, {-6, -35}, {0, -36}, {6, -35},
                                                       {16, -38},  {25, -45},  {16, -53}, {6, -56}, {0, -57},
                                                       {-6, -56},  {-16, -53}, {-20, -45}, {-7, -41}, {0, -41},
                                                       {7, -41},   {20, -45},  {7, -49},  {0, -49},  {-7, -49}}};
    for (const auto& p : mouth)
    {
        out.push_back({p[0], p[1], Region::Mouth});
    }
    return out;
}

struct Tessellation
{
    std::size_t rings;
    std::size_t segments;
};

// rings x segments vertices. Segments are a multiple of 4 so that the x = 0
// plane passes through vertex columns and the mesh is mirror symmetric.
Tessellation choose_tessellation(std::size_t target)
{
    Tessellation best{0, 0};
    std::size_t best_gap = std::numeric_limits<std::size_t>::max();
    double best_aspect = std::numeric_limits<double>::max();
    for (std::size_t s = 8; s <= 4096; s += 4)
    {
        for (std::size_t r : {target / s, target / s + 1})
        {
            if (r < 3)
            {
                continue;
            }
            const std::size_t count = r * s;
            const std::size_t gap = count > target ? count - target : target - count;
            const double aspect = std::abs(static_cast<double>(s) / static_cast<double>(r) - 2.4);
            if (gap < best_gap || (gap == best_gap && aspect < best_aspect))
            {
                best = {r, s};
                best_gap = gap;
                best_aspect = aspect;
            }
        }
    }
    return best;
}

struct Mesh
{
    VertexMatrix vertices;
    MeshTopology topology;
};

Mesh build_head_mesh(std::size_t target_vertices)
{
    const auto [rings, segments] = choose_tessellation(target_vertices);

    // Mirror-exact angle tables: cos(pi - b) = -cos(b), sin(-b) = -sin(b).
    std::vector<double> cos_b(segments), sin_b(segments);
    const std::size_t quarter = segments / 4;
    for (std::size_t j = 0; j <= quarter; ++j)
    {
        const double beta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(segments);
        cos_b[j] = (j == quarter) ? 0.0 : std::cos(beta);
        sin_b[j] = (j == quarter) ? 1.0 : std::sin(beta);
    }
    for (std::size_t j = quarter + 1; j <= segments / 2; ++j)
    {
        cos_b[j] = -cos_b[segments / 2 - j];
        sin_b[j] = sin_b[segments / 2 - j];
    }
    for (std::size_t j = segments / 2 + 1; j < segments; ++j)
    {
        cos_b[j] = cos_b[segments - j];
        sin_b[j] = -sin_b[segments - j];
    }

    Mesh mesh;
    mesh.vertices.resize(static_cast<Eigen::Index>(rings * segments), 3);
    for (std::size_t i = 0; i < rings; ++i)
    {
        const double alpha = 0.5 * std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(rings);
        const double sa = std::sin(alpha);
        const double ca = (i + 1 == rings) ? 0.0 : std::cos(alpha);
        for (std::size_t j = 0; j < segments; ++j)
        {
            const auto row = static_cast<Eigen::Index>(i * segments + j);
            mesh.vertices(row, 0) = head_a * sa * cos_b[j];
            mesh.vertices(row, 1) = head_b * sa * sin_b[j];
            mesh.vertices(row, 2) = head_c * ca;
        }
    }

    auto vid = [segments](std::size_t i, std::size_t j) {
        return static_cast<std::uint32_t>(i * segments + (j % segments));
    };
    auto& tris = mesh.topology.triangles;
    // Innermost ring is a planar polygon; close it with a fan.
    for (std::size_t j = 1; j + 1 < segments; ++j)
    {
        tris.push_back({vid(0, 0), vid(0, j), vid(0, j + 1)});
    }
    for (std::size_t i = 0; i + 1 < rings; ++i)
    {
        for (std::size_t j = 0; j < segments; ++j)
        {
            const double mid = 2.0 * std::numbers::pi * (static_cast<double>(j) + 0.5) / static_cast<double>(segments);
            if (std::cos(mid) > 0.0)
            {
                tris.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
                tris.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
            }
            else
            {
                tris.push_back({vid(i, j), vid(i + 1, j), vid(i, j + 1)});
                tris.push_back({vid(i, j + 1), vid(i + 1, j), vid(i + 1, j + 1)});
            }
        }
    }

    // Centre in depth only; x and y are already symmetric about the origin.
    const double z_mean = mesh.vertices.col(2).mean();
    mesh.vertices.col(2).array() -= z_mean;
    return mesh;
}

double dome_height(double x, double y)
{
    const double t = 1.0 - (x * x) / (head_a * head_a) - (y * y) / (head_b * head_b);
    return head_c * std::sqrt(std::max(0.0, t));
}

LandmarkSpec place_landmarks(const VertexMatrix& vertices, double z_offset)
{
    const auto layout = canonical_layout();
    LandmarkSpec spec;
    std::unordered_set<Eigen::Index> taken;
    for (const auto& lm : layout)
    {
        const Eigen::RowVector3d target(lm.x, lm.y, dome_height(lm.x, lm.y) - z_offset);
        Eigen::Index best = -1;
        double best_d = std::numeric_limits<double>::max();
        for (Eigen::Index v = 0; v < vertices.rows(); ++v)
        {
            // Midline landmarks stay on the exact x = 0 column.
            if (taken.count(v) != 0 || (lm.x == 0.0 && vertices(v, 0) != 0.0))
            {
                continue;
            }
            const double d = (vertices.row(v) - target).squaredNorm();
            if (d < best_d)
            {
                best_d = d;
                best = v;
            }
        }
        if (best < 0)
        {
            throw GenerationError("build_shape_model: mesh has too few vertices for a 68-point landmark layout");
        }
        taken.insert(best);
        spec.indices.push_back(static_cast<std::uint32_t>(best));
        spec.regions.push_back(lm.region);
    }
    return spec;
}

Eigen::VectorXd smooth_random_field(const VertexMatrix& vertices, std::mt19937_64& rng)
{
    std::uniform_int_distribution<Eigen::Index> pick(0, vertices.rows() - 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    VertexMatrix field = VertexMatrix::Zero(vertices.rows(), 3);
    for (int m = 0; m < bumps_per_direction; ++m)
    {
        const Eigen::RowVector3d centre = vertices.row(pick(rng));
        const Eigen::RowVector3d amplitude(gauss(rng), gauss(rng), gauss(rng));
        for (Eigen::Index v = 0; v < vertices.rows(); ++v)
        {
            const double d2 = (vertices.row(v) - centre).squaredNorm();
            field.row(v) += amplitude * std::exp(-d2 / (2.0 * bump_width * bump_width));
        }
    }
    // Zero net translation.
    field.rowwise() -= field.colwise().mean();
    return Eigen::Map<const Eigen::VectorXd>(field.data(), field.size());
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t tag)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(tag)};
    return std::mt19937_64(seq);
}

constexpr std::uint64_t tag_basis = 0xB5;
constexpr std::uint64_t tag_identity = 0x1D;
constexpr std::uint64_t tag_expression = 0xE7;

Eigen::RowVector2d eye_centroid(const LandmarkSet2D& lm, std::span<const std::size_t> eye)
{
    Eigen::RowVector2d c = Eigen::RowVector2d::Zero();
    for (auto p : eye)
    {
        c += lm.points().row(static_cast<Eigen::Index>(p));
    }
    return c / static_cast<double>(eye.size());
}

} // namespace

double ShapeModel::inter_eye_distance() const
{
    auto centroid = [this](std::span<const std::size_t> eye) {
        Eigen::RowVector2d c = Eigen::RowVector2d::Zero();
        for (auto p : eye)
        {
            c += neutral_mean.vertices().row(landmark_spec.indices.at(p)).head<2>();
        }
        return Eigen::RowVector2d(c / static_cast<double>(eye.size()));
    };
    return (centroid(left_eye_landmarks) - centroid(right_eye_landmarks)).norm();
}

ShapeModel build_shape_model(const ShapeModelConfig& config)
{
    if (config.n_vertices < 50)
    {
        throw ValidationError("build_shape_model: n_vertices must be at least 50, got " +
                              std::to_string(config.n_vertices));
    }
    if (config.identity_rank + config.expression_rank > 3 * config.n_vertices)
    {
        throw ValidationError("build_shape_model: identity_rank + expression_rank exceeds 3 * n_vertices");
    }

    Mesh mesh = build_head_mesh(config.n_vertices);
    // The rim (z = 0 before centring) is the lowest ring.
    const double z_offset = -mesh.vertices.col(2).minCoeff();
    ShapeModel model;
    model.config = config;
    model.landmark_spec = place_landmarks(mesh.vertices, z_offset);
    model.topology = std::move(mesh.topology);

    const std::size_t n = static_cast<std::size_t>(mesh.vertices.rows());
    const auto r_id = static_cast<Eigen::Index>(config.identity_rank);
    const auto r_ex = static_cast<Eigen::Index>(config.expression_rank);
    const auto dim = static_cast<Eigen::Index>(3 * n);
    if (static_cast<std::size_t>(r_id + r_ex) > 3 * n)
    {
        throw GenerationError("build_shape_model: requested ranks exceed 3n for the chosen tessellation");
    }

    Eigen::MatrixXd fields(dim, r_id + r_ex);
    auto rng = stream(config.seed, 0, 0, tag_basis);
    for (Eigen::Index k = 0; k < fields.cols(); ++k)
    {
        fields.col(k) = smooth_random_field(mesh.vertices, rng);
    }
    if (fields.cols() > 0)
    {
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(fields);
        const Eigen::MatrixXd r = qr.matrixQR().topRows(fields.cols()).triangularView<Eigen::Upper>();
        const double largest = r.diagonal().cwiseAbs().maxCoeff();
        for (Eigen::Index k = 0; k < r.cols(); ++k)
        {
            if (!(std::abs(r(k, k)) > 1e-9 * largest))
            {
                throw GenerationError("build_shape_model: basis direction " + std::to_string(k) +
                                      " is linearly dependent on earlier ones");
            }
        }
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, fields.cols());
        // Fix the sign so each direction correlates positively with its raw field.
        for (Eigen::Index k = 0; k < q.cols(); ++k)
        {
            if (r(k, k) < 0.0)
            {
                q.col(k) = -q.col(k);
            }
        }
        model.identity_basis = q.leftCols(r_id);
        model.expression_basis = q.rightCols(r_ex);
    }
    else
    {
        model.identity_basis.resize(dim, 0);
        model.expression_basis.resize(dim, 0);
    }

    model.identity_scales = decaying_scales(r_id, identity_rms_per_vertex, n);
    model.expression_scales = decaying_scales(r_ex, expression_rms_per_vertex, n);
    model.neutral_mean = Shape3D(std::move(mesh.vertices));
    return model;
}

double default_camera_scale(const ShapeModel& model)
{
    return target_image_inter_eye_distance / model.inter_eye_distance();
}

Shape3D sample_shape(const ShapeModel& model, const SampleSpec& spec)
{
    if (spec.identity_coeffs.size() != model.identity_basis.cols() ||
        spec.expression_coeffs.size() != model.expression_basis.cols())
    {
        throw StructuralError("sample_shape: coefficient lengths (" + std::to_string(spec.identity_coeffs.size()) +
                              ", " + std::to_string(spec.expression_coeffs.size()) + ") do not match the model (" +
                              std::to_string(model.identity_basis.cols()) + ", " +
                              std::to_string(model.expression_basis.cols()) + ")");
    }
    Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(model.neutral_mean.flat().data(),
                                                             static_cast<Eigen::Index>(model.neutral_mean.flat().size()));
    if (spec.identity_coeffs.size() > 0)
    {
        flat.noalias() += model.identity_basis * spec.identity_coeffs;
    }
    if (spec.expression_coeffs.size() > 0)
    {
        flat.noalias() += model.expression_basis * spec.expression_coeffs;
    }
    VertexMatrix v = Eigen::Map<const VertexMatrix>(flat.data(), flat.size() / 3, 3);
    // Expression is applied in the neutral frame, then the head is posed.
    if (spec.yaw != 0.0 || spec.pitch != 0.0)
    {
        const Eigen::Matrix3d r = rotation_from_yaw_pitch(spec.yaw, spec.pitch);
        v = v * r.transpose();
    }
    const Eigen::RowVector3d centroid = v.colwise().mean();
    v.rowwise() -= centroid;
    return Shape3D(std::move(v));
}

void Dataset::validate() const
{
    const std::size_t n = vertex_count();
    landmark_spec.validate(n);
    if (!topology.empty())
    {
        topology.validate(n);
    }
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        if (samples[i].shape.size() != n)
        {
            throw StructuralError("Dataset: sample " + std::to_string(i) + " has " +
                                  std::to_string(samples[i].shape.size()) + " vertices, expected " + std::to_string(n));
        }
        if (samples[i].landmarks.size() != landmark_spec.size())
        {
            throw StructuralError("Dataset: sample " + std::to_string(i) + " has " +
                                  std::to_string(samples[i].landmarks.size()) + " landmarks, expected " +
                                  std::to_string(landmark_spec.size()));
        }
    }
}

DatasetConfig desk_scale_config(std::uint64_t seed)
{
    DatasetConfig c;
    c.seed = seed;
    return c;
}

DatasetConfig paper_scale_config(std::uint64_t seed)
{
    DatasetConfig c;
    c.subjects = 200;
    c.expressions_per_subject = 1;
    c.yaw_grid = {-90, -70, -50, -30, -15, 0, 15, 30, 50, 70, 90};
    c.pitch_grid = {-30, -15, 0, 15, 30};
    c.seed = seed;
    return c;
}

Dataset generate_dataset(const ShapeModel& model, const DatasetConfig& config)
{
    if (config.yaw_grid.empty() || config.pitch_grid.empty())
    {
        throw ValidationError("generate_dataset: pose grids must be non-empty");
    }
    if (config.subjects == 0 || config.expressions_per_subject == 0)
    {
        throw ValidationError("generate_dataset: need at least one subject and one expression");
    }
    const WeakPerspectiveCamera camera(config.camera_scale.value_or(default_camera_scale(model)));

    Dataset out;
    out.landmark_spec = model.landmark_spec;
    out.topology = model.topology;
    out.camera_scale = camera.scale();
    out.seed = config.seed;
    out.provenance = model.config;
    out.samples.reserve(config.sample_count());

    const auto r_id = model.identity_basis.cols();
    const auto r_ex = model.expression_basis.cols();
    for (std::size_t subject = 0; subject < config.subjects; ++subject)
    {
        SampleSpec spec;
        {
            auto rng = stream(config.seed, subject, 0, tag_identity);
            std::normal_distribution<double> gauss(0.0, 1.0);
            spec.identity_coeffs.resize(r_id);
            for (Eigen::Index k = 0; k < r_id; ++k)
            {
                spec.identity_coeffs(k) = model.identity_scales(k) * gauss(rng);
            }
        }
        for (std::size_t expression = 0; expression < config.expressions_per_subject; ++expression)
        {
            spec.expression_coeffs = Eigen::VectorXd::Zero(r_ex);
            if (expression > 0)
            {
                auto rng = stream(config.seed, subject, expression, tag_expression);
                std::normal_distribution<double> gauss(0.0, 1.0);
                for (Eigen::Index k = 0; k < r_ex; ++k)
                {
                    spec.expression_coeffs(k) = model.expression_scales(k) * gauss(rng);
                }
            }
            for (double yaw : config.yaw_grid)
            {
                for (double pitch : config.pitch_grid)
                {
                    spec.yaw = yaw;
                    spec.pitch = pitch;
                    spec.is_frontal_neutral = expression == 0 && yaw == 0.0 && pitch == 0.0;

                    Sample s;
                    s.subject = static_cast<std::uint32_t>(subject);
                    s.yaw = yaw;
                    s.pitch = pitch;
                    s.frontal_neutral = spec.is_frontal_neutral;
                    s.shape = sample_shape(model, spec);
                    const VertexMatrix normals = vertex_normals(s.shape, model.topology);
                    VertexMatrix landmark_normals(static_cast<Eigen::Index>(model.landmark_spec.size()), 3);
                    for (std::size_t i = 0; i < model.landmark_spec.size(); ++i)
                    {
                        landmark_normals.row(static_cast<Eigen::Index>(i)) = normals.row(model.landmark_spec.indices[i]);
                    }
                    const VisibilityMask mask = landmark_visibility(landmark_normals, camera);
                    s.landmarks = project(s.shape, model.landmark_spec, camera, mask);
                    out.samples.push_back(std::move(s));
                }
            }
        }
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
    {
        throw ValidationError("split: train_fraction must lie strictly between 0 and 1");
    }
    std::set<std::uint32_t> subject_set;
    for (const auto& s : dataset.samples)
    {
        subject_set.insert(s.subject);
    }
    if (subject_set.size() < 2)
    {
        throw ValidationError("split: need at least two subjects, got " + std::to_string(subject_set.size()));
    }
    std::vector<std::uint32_t> subjects(subject_set.begin(), subject_set.end());
    std::mt19937_64 rng(seed);
    std::shuffle(subjects.begin(), subjects.end(), rng);
    const auto total = subjects.size();
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(total)));
    n_train = std::clamp<std::size_t>(n_train, 1, total - 1);
    const std::unordered_set<std::uint32_t> train_subjects(subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(n_train));

    Dataset train;
    Dataset test;
    for (Dataset* d : {&train, &test})
    {
        d->landmark_spec = dataset.landmark_spec;
        d->topology = dataset.topology;
        d->camera_scale = dataset.camera_scale;
        d->seed = dataset.seed;
        d->provenance = dataset.provenance;
    }
    for (const auto& s : dataset.samples)
    {
        (train_subjects.count(s.subject) != 0 ? train : test).samples.push_back(s);
    }
    return {std::move(train), std::move(test)};
}

Dataset restrict_vertices(const Dataset& dataset, std::span<const std::uint32_t> vertices)
{
    std::vector<std::int64_t> remap(dataset.vertex_count(), -1);
    for (std::size_t i = 0; i < vertices.size(); ++i)
    {
        if (vertices[i] >= remap.size())
        {
            throw StructuralError("restrict_vertices: vertex " + std::to_string(vertices[i]) + " out of range");
        }
        if (remap[vertices[i]] >= 0)
        {
            throw StructuralError("restrict_vertices: vertex " + std::to_string(vertices[i]) + " listed twice");
        }
        remap[vertices[i]] = static_cast<std::int64_t>(i);
    }
    Dataset out;
    out.landmark_spec.regions = dataset.landmark_spec.regions;
    for (auto idx : dataset.landmark_spec.indices)
    {
        if (remap[idx] < 0)
        {
            throw StructuralError("restrict_vertices: landmark vertex " + std::to_string(idx) +
                                  " is not part of the subset");
        }
        out.landmark_spec.indices.push_back(static_cast<std::uint32_t>(remap[idx]));
    }
    out.camera_scale = dataset.camera_scale;
    out.seed = dataset.seed;
    out.samples.reserve(dataset.samples.size());
    for (const auto& s : dataset.samples)
    {
        Sample r = s;
        r.shape = s.shape.subset(vertices);
        out.samples.push_back(std::move(r));
    }
    return out;
}

Dataset restrict_landmarks(const Dataset& dataset, std::span<const std::size_t> positions)
{
    Dataset out;
    out.landmark_spec = dataset.landmark_spec.select(positions);
    out.topology = dataset.topology;
    out.camera_scale = dataset.camera_scale;
    out.seed = dataset.seed;
    out.provenance = dataset.provenance;
    out.samples.reserve(dataset.samples.size());
    for (const auto& s : dataset.samples)
    {
        Sample r{s.subject, s.yaw, s.pitch, s.frontal_neutral, s.shape, s.landmarks.select(positions)};
        out.samples.push_back(std::move(r));
    }
    return out;
}

double image_inter_eye_distance(const Dataset& dataset)
{
    if (dataset.landmark_count() < 48)
    {
        throw StructuralError("image_inter_eye_distance: the dataset does not use the 68-point layout");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : dataset.samples)
    {
        if (!s.frontal_neutral)
        {
            continue;
        }
        sum += (eye_centroid(s.landmarks, left_eye_landmarks) - eye_centroid(s.landmarks, right_eye_landmarks)).norm();
        ++count;
    }
    if (count == 0)
    {
        throw InitializationError("image_inter_eye_distance: no frontal-neutral sample");
    }
    return sum / static_cast<double>(count);
}

} // namespace csr3d
