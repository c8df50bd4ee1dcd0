/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: src/metrics.cpp
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
#include "csr3d/metrics.hpp"
#include "csr3d/error.hpp"
#include "csr3d/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace csr3d {

namespace {

constexpr std::size_t predict_chunk = 32;

// Runs task(i) for i in [0, count) on up to `threads` workers; rethrows the first failure.
template <typename Task>
void run_parallel(std::size_t count, std::size_t threads, Task&& task)
{
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
    if (workers == 1)
    {
        for (std::size_t i = 0; i < count; ++i)
        {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
    {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++)
            {
                try
                {
                    task(i);
                }
                catch (...)
                {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                    {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool)
    {
        t.join();
    }
    if (failure)
    {
        std::rethrow_exception(failure);
    }
}

void check_same_size(const Shape3D& a, const Shape3D& b, const char* what)
{
    if (a.size() != b.size())
    {
        throw StructuralError(std::string(what) + ": ground truth has " + std::to_string(a.size()) +
                              " vertices, reconstruction has " + std::to_string(b.size()));
    }
}

std::vector<double> distances(const Shape3D& a, const Shape3D& b)
{
    std::vector<double> out(a.size());
    kernels::vertex_distances(a.flat(), b.flat(), out);
    return out;
}

std::vector<double> aligned_distances(const Shape3D& ground_truth, const Shape3D& reconstructed, bool align)
{
    if (align)
    {
        return distances(ground_truth, procrustes_align(reconstructed, ground_truth).aligned);
    }
    return distances(ground_truth, reconstructed);
}

double mean_of(const std::vector<double>& values, std::span<const std::uint32_t> subset)
{
    double sum = 0.0;
    for (auto v : subset)
    {
        sum += values[v];
    }
    return subset.empty() ? 0.0 : sum / static_cast<double>(subset.size());
}

// Positions of `inner` within the sorted set `outer`; every element must be present.
std::vector<std::uint32_t> positions_in(std::span<const std::uint32_t> outer, std::span<const std::uint32_t> inner)
{
    std::vector<std::uint32_t> out;
    out.reserve(inner.size());
    for (auto v : inner)
    {
        const auto it = std::lower_bound(outer.begin(), outer.end(), v);
        if (it == outer.end() || *it != v)
        {
            throw StructuralError("vertex subsets are not nested: vertex " + std::to_string(v) + " is missing");
        }
        out.push_back(static_cast<std::uint32_t>(it - outer.begin()));
    }
    return out;
}

std::vector<std::uint32_t> sorted_unique(std::span<const std::uint32_t> v, const char* what)
{
    std::vector<std::uint32_t> out(v.begin(), v.end());
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end())
    {
        throw StructuralError(std::string(what) + ": a vertex subset lists a vertex twice");
    }
    return out;
}

std::vector<LandmarkSet2D> selected_inputs(const Dataset& test, std::span<const std::size_t> positions)
{
    std::vector<LandmarkSet2D> out;
    out.reserve(test.size());
    for (const auto& s : test.samples)
    {
        out.push_back(s.landmarks.select(positions));
    }
    return out;
}

void require_grid_increasing(const std::vector<double>& grid, const char* what)
{
    for (std::size_t i = 1; i < grid.size(); ++i)
    {
        if (!(grid[i] > grid[i - 1]))
        {
            throw ValidationError(std::string(what) + ": grid values must be strictly increasing");
        }
    }
}

AblationSeries& add_series(AblationResult& result, std::string metric)
{
    result.series.push_back({std::move(metric), std::vector<double>(result.grid.size(), 0.0),
                             std::vector<double>(result.grid.size(), 0.0)});
    return result.series.back();
}

// Column `which` of the per-grid-point summaries as one series.
void add_summary_series(AblationResult& result, std::string metric,
                        const std::vector<std::vector<Summary>>& measured, std::size_t which)
{
    auto& s = add_series(result, std::move(metric));
    for (std::size_t g = 0; g < measured.size(); ++g)
    {
        s.values[g] = measured[g][which].mean;
        s.stds[g] = measured[g][which].std;
    }
}

// Trains on `vertices` of the landmark-restricted training set and measures
// MAE over each of `measured` (positions within `vertices`), aligned per set.
std::vector<Summary> train_and_measure(const Dataset& train, const Dataset& test,
                                       std::span<const std::uint32_t> vertices,
                                       std::span<const LandmarkSet2D> inputs,
                                       const std::vector<std::vector<std::uint32_t>>& measured,
                                       const AblationConfig& config)
{
    const Dataset restricted = restrict_vertices(train, vertices);
    const CascadeModel model = train_cascade(restricted, config.train).first;
    const auto predictions = predict_all(model, inputs);

    std::vector<Summary> out;
    for (const auto& positions : measured)
    {
        std::vector<std::uint32_t> original(positions.size());
        for (std::size_t i = 0; i < positions.size(); ++i)
        {
            original[i] = vertices[positions[i]];
        }
        std::vector<double> per_sample(test.size());
        for (std::size_t i = 0; i < test.size(); ++i)
        {
            per_sample[i] =
                mae(test.samples[i].shape.subset(original), predictions[i].subset(positions), config.align).value;
        }
        out.push_back(summarize(per_sample));
    }
    return out;
}

} // namespace

ErrorMap ErrorMap::from_values(std::vector<double> values)
{
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (!(values[i] >= 0.0 && std::isfinite(values[i])))
        {
            throw ValidationError("ErrorMap: entry " + std::to_string(i) + " is negative or non-finite");
        }
    }
    ErrorMap map;
    const Summary s = summarize(values);
    map.per_vertex = std::move(values);
    map.mean = s.mean;
    map.std = s.std;
    return map;
}

Summary summarize(std::span<const double> values)
{
    if (values.empty())
    {
        return {};
    }
    double sum = 0.0;
    for (auto v : values)
    {
        sum += v;
    }
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (auto v : values)
    {
        sq += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

MetricValue mae(const Shape3D& ground_truth, const Shape3D& reconstructed, bool align, MaeNorm norm)
{
    check_same_size(ground_truth, reconstructed, "mae");
    MetricValue out;
    out.map = ErrorMap::from_values(aligned_distances(ground_truth, reconstructed, align));
    if (norm == MaeNorm::PerVertex)
    {
        out.value = out.map.mean;
    }
    else
    {
        double sq = 0.0;
        for (auto d : out.map.per_vertex)
        {
            sq += d * d;
        }
        out.value = std::sqrt(sq) / static_cast<double>(ground_truth.size());
    }
    return out;
}

MetricValue npde(const Shape3D& ground_truth, const Shape3D& reconstructed)
{
    check_same_size(ground_truth, reconstructed, "npde");
    const auto z = ground_truth.vertices().col(2);
    const double range = z.maxCoeff() - z.minCoeff();
    if (!(range > 0.0))
    {
        throw DegenerateGeometryError("npde: ground-truth depth range is zero");
    }
    std::vector<double> values(ground_truth.size());
    for (std::size_t j = 0; j < values.size(); ++j)
    {
        const auto r = static_cast<Eigen::Index>(j);
        values[j] = std::abs(z(r) - reconstructed.vertices()(r, 2)) / range;
    }
    MetricValue out;
    out.map = ErrorMap::from_values(std::move(values));
    out.value = out.map.mean;
    return out;
}

Summary batch_mae(std::span<const Shape3D> ground_truth, std::span<const Shape3D> reconstructed, bool align)
{
    if (ground_truth.size() != reconstructed.size())
    {
        throw StructuralError("batch_mae: " + std::to_string(ground_truth.size()) + " ground truths but " +
                              std::to_string(reconstructed.size()) + " reconstructions");
    }
    std::vector<double> values(ground_truth.size());
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        values[i] = mae(ground_truth[i], reconstructed[i], align).value;
    }
    return summarize(values);
}

std::size_t RegionPartition::vertex_count() const noexcept
{
    std::size_t n = 0;
    for (const auto& m : members)
    {
        n += m.size();
    }
    return n;
}

void RegionPartition::validate(std::size_t n) const
{
    std::vector<std::uint8_t> seen(n, 0);
    for (std::size_t r = 0; r < members.size(); ++r)
    {
        for (auto v : members[r])
        {
            if (v >= n)
            {
                throw StructuralError("RegionPartition: vertex " + std::to_string(v) + " out of range");
            }
            if (seen[v]++)
            {
                throw StructuralError("RegionPartition: vertex " + std::to_string(v) + " is in two regions");
            }
        }
    }
    const auto gap = std::find(seen.begin(), seen.end(), 0);
    if (gap != seen.end())
    {
        throw StructuralError("RegionPartition: vertex " + std::to_string(gap - seen.begin()) +
                              " belongs to no region");
    }
}

RegionPartition region_partition(const Shape3D& reference, const LandmarkSpec& spec, double max_distance)
{
    spec.validate(reference.size());
    const auto& v = reference.vertices();
    RegionPartition out;
    for (std::size_t j = 0; j < reference.size(); ++j)
    {
        double best = std::numeric_limits<double>::infinity();
        Region region = Region::Other;
        for (std::size_t k = 0; k < spec.size(); ++k)
        {
            const double d =
                (v.row(static_cast<Eigen::Index>(j)) - v.row(static_cast<Eigen::Index>(spec.indices[k]))).norm();
            if (d < best)
            {
                best = d;
                region = spec.regions[k];
            }
        }
        if (best > max_distance)
        {
            region = Region::Other;
        }
        out.members[static_cast<std::size_t>(region)].push_back(static_cast<std::uint32_t>(j));
    }
    return out;
}

RegionMae region_mae(const Shape3D& ground_truth, const Shape3D& reconstructed, const RegionPartition& partition,
                     bool align)
{
    check_same_size(ground_truth, reconstructed, "region_mae");
    partition.validate(ground_truth.size());
    const auto d = aligned_distances(ground_truth, reconstructed, align);
    RegionMae out;
    for (std::size_t r = 0; r < 4; ++r)
    {
        out.value[r] = mean_of(d, partition.members[r]);
        out.count[r] = partition.members[r].size();
    }
    return out;
}

std::string_view axis_name(AblationAxis axis) noexcept
{
    switch (axis)
    {
    case AblationAxis::LandmarkCount: return "landmark-count";
    case AblationAxis::VertexCoverage: return "vertex-coverage";
    case AblationAxis::VertexDensity: return "vertex-density";
    case AblationAxis::StageIndex: return "stage-index";
    case AblationAxis::NoiseMode: return "noise-mode";
    }
    return "unknown";
}

const AblationSeries& AblationResult::at(std::string_view metric) const
{
    for (const auto& s : series)
    {
        if (s.metric == metric)
        {
            return s;
        }
    }
    throw StructuralError("AblationResult: no series named " + std::string(metric));
}

void AblationResult::validate() const
{
    for (std::size_t i = 1; i < grid.size(); ++i)
    {
        if (!(grid[i] > grid[i - 1]))
        {
            throw StructuralError("AblationResult: grid is not strictly increasing");
        }
    }
    for (const auto& s : series)
    {
        if (s.values.size() != grid.size() || s.stds.size() != grid.size())
        {
            throw StructuralError("AblationResult: series " + s.metric + " does not match the grid");
        }
    }
}

std::vector<std::vector<std::size_t>> default_landmark_nesting(std::size_t landmark_count,
                                                               std::span<const std::size_t> sizes)
{
    std::vector<std::size_t> order(landmark_count);
    for (std::size_t i = 0; i < landmark_count; ++i)
    {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [](std::size_t a, std::size_t b) { return a % 4 < b % 4; });
    std::vector<std::vector<std::size_t>> out;
    for (auto k : sizes)
    {
        if (k < 4 || k > landmark_count)
        {
            throw ValidationError("default_landmark_nesting: subset size " + std::to_string(k) +
                                  " outside [4, " + std::to_string(landmark_count) + "]");
        }
        std::vector<std::size_t> subset(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(subset.begin(), subset.end());
        out.push_back(std::move(subset));
    }
    return out;
}

AblationResult landmark_ablation(const Dataset& train, const Dataset& test,
                                 std::span<const std::vector<std::size_t>> nested_subsets,
                                 const AblationConfig& config)
{
    config.train.validate();
    AblationResult result;
    result.axis = AblationAxis::LandmarkCount;
    for (std::size_t g = 0; g < nested_subsets.size(); ++g)
    {
        const auto& s = nested_subsets[g];
        if (s.size() < 4)
        {
            throw ValidationError("landmark_ablation: every subset needs at least 4 landmarks");
        }
        if (g > 0)
        {
            for (auto p : nested_subsets[g - 1])
            {
                if (std::find(s.begin(), s.end(), p) == s.end())
                {
                    throw ValidationError("landmark_ablation: subsets are not nested");
                }
            }
        }
        result.grid.push_back(static_cast<double>(s.size()));
    }
    require_grid_increasing(result.grid, "landmark_ablation");

    const RegionPartition partition =
        region_partition(init_state(train).mean_shape, train.landmark_spec, config.region_radius);

    const std::size_t points = nested_subsets.size();
    const std::size_t stages = config.train.stages;
    std::vector<Summary> overall(points);
    std::vector<std::array<Summary, 4>> regional(points);
    std::vector<std::vector<double>> objectives(points);

    run_parallel(points, config.threads, [&](std::size_t g) {
        const auto& positions = nested_subsets[g];
        auto [model, report] = train_cascade(restrict_landmarks(train, positions), config.train);
        const auto inputs = selected_inputs(test, positions);
        const auto predictions = predict_all(model, inputs);
        std::vector<double> totals(test.size());
        std::array<std::vector<double>, 4> per_region;
        for (std::size_t i = 0; i < test.size(); ++i)
        {
            const auto d = aligned_distances(test.samples[i].shape, predictions[i], config.align);
            totals[i] = summarize(d).mean;
            for (std::size_t r = 0; r < 4; ++r)
            {
                per_region[r].push_back(mean_of(d, partition.members[r]));
            }
        }
        overall[g] = summarize(totals);
        for (std::size_t r = 0; r < 4; ++r)
        {
            regional[g][r] = summarize(per_region[r]);
        }
        objectives[g] = report.objective_per_stage;
    });

    auto& m = add_series(result, "mae");
    for (std::size_t g = 0; g < points; ++g)
    {
        m.values[g] = overall[g].mean;
        m.stds[g] = overall[g].std;
    }
    for (auto region : all_regions)
    {
        auto& s = add_series(result, "mae_" + std::string(region_name(region)));
        for (std::size_t g = 0; g < points; ++g)
        {
            s.values[g] = regional[g][static_cast<std::size_t>(region)].mean;
            s.stds[g] = regional[g][static_cast<std::size_t>(region)].std;
        }
    }
    for (std::size_t k = 0; k <= stages; ++k)
    {
        auto& s = add_series(result, "objective_stage_" + std::to_string(k));
        for (std::size_t g = 0; g < points; ++g)
        {
            s.values[g] = objectives[g][k];
        }
    }
    return result;
}

std::vector<std::size_t> facial_component_landmarks(const LandmarkSpec& spec)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < spec.size(); ++i)
    {
        if (spec.regions[i] != Region::Other)
        {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::vector<std::uint32_t>> default_coverage_subsets(const Shape3D& reference,
                                                                 const LandmarkSpec& spec,
                                                                 const RegionPartition& partition,
                                                                 std::size_t grid_points)
{
    const std::size_t n = reference.size();
    spec.validate(n);
    partition.validate(n);
    if (grid_points < 2)
    {
        throw ValidationError("default_coverage_subsets: at least 2 grid points are required");
    }
    std::vector<std::uint8_t> inner(n, 0);
    for (auto region : {Region::Nose, Region::Eyes, Region::Mouth})
    {
        for (auto v : partition.of(region))
        {
            inner[v] = 1;
        }
    }
    for (auto v : spec.indices)
    {
        inner[v] = 1;
    }
    std::vector<std::uint32_t> innermost;
    std::vector<std::pair<double, std::uint32_t>> rest;
    const auto& pts = reference.vertices();
    for (std::size_t j = 0; j < n; ++j)
    {
        if (inner[j])
        {
            innermost.push_back(static_cast<std::uint32_t>(j));
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (auto idx : spec.indices)
        {
            best = std::min(best, (pts.row(static_cast<Eigen::Index>(j)) - pts.row(idx)).norm());
        }
        rest.emplace_back(best, static_cast<std::uint32_t>(j));
    }
    std::sort(rest.begin(), rest.end());
    if (rest.size() < grid_points - 1)
    {
        throw ValidationError("default_coverage_subsets: too few vertices outside the facial components for " +
                              std::to_string(grid_points) + " grid points");
    }
    std::vector<std::vector<std::uint32_t>> out;
    for (std::size_t g = 0; g < grid_points; ++g)
    {
        const std::size_t take = (g * rest.size() + (grid_points - 1) / 2) / (grid_points - 1);
        std::vector<std::uint32_t> subset = innermost;
        for (std::size_t i = 0; i < take; ++i)
        {
            subset.push_back(rest[i].second);
        }
        std::sort(subset.begin(), subset.end());
        out.push_back(std::move(subset));
    }
    return out;
}

AblationResult vertex_coverage_ablation(const Dataset& train, const Dataset& test,
                                        std::span<const std::vector<std::uint32_t>> nested_subsets,
                                        std::span<const std::size_t> landmark_positions,
                                        const AblationConfig& config)
{
    config.train.validate();
    if (nested_subsets.empty())
    {
        throw ValidationError("vertex_coverage_ablation: no vertex subsets");
    }
    std::vector<std::vector<std::uint32_t>> subsets;
    for (const auto& s : nested_subsets)
    {
        subsets.push_back(sorted_unique(s, "vertex_coverage_ablation"));
        for (auto idx : train.landmark_spec.indices)
        {
            if (!std::binary_search(subsets.back().begin(), subsets.back().end(), idx))
            {
                throw ValidationError("vertex_coverage_ablation: landmark vertex " + std::to_string(idx) +
                                      " missing from a subset");
            }
        }
        if (subsets.size() > 1)
        {
            positions_in(subsets.back(), subsets[subsets.size() - 2]);
        }
    }
    AblationResult result;
    result.axis = AblationAxis::VertexCoverage;
    for (const auto& s : subsets)
    {
        result.grid.push_back(static_cast<double>(s.size()));
    }
    require_grid_increasing(result.grid, "vertex_coverage_ablation");

    const Dataset reduced = restrict_landmarks(train, landmark_positions);
    const auto inputs = selected_inputs(test, landmark_positions);
    const std::size_t points = subsets.size();
    std::vector<std::vector<Summary>> measured(points);
    run_parallel(points, config.threads, [&](std::size_t g) {
        std::vector<std::uint32_t> all(subsets[g].size());
        for (std::size_t i = 0; i < all.size(); ++i)
        {
            all[i] = static_cast<std::uint32_t>(i);
        }
        const std::vector<std::vector<std::uint32_t>> sets{all, positions_in(subsets[g], subsets.front())};
        measured[g] = train_and_measure(reduced, test, subsets[g], inputs, sets, config);
    });

    add_summary_series(result, "mae", measured, 0);
    add_summary_series(result, "mae_innermost", measured, 1);
    return result;
}

std::vector<std::vector<std::uint32_t>> density_subsets(std::span<const std::uint32_t> region,
                                                        const LandmarkSpec& spec,
                                                        std::span<const std::size_t> factors)
{
    std::vector<std::uint32_t> base(region.begin(), region.end());
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    std::vector<std::vector<std::uint32_t>> out;
    for (auto f : factors)
    {
        if (f < 1)
        {
            throw ValidationError("density_subsets: factors must be at least 1");
        }
        std::vector<std::uint32_t> subset(spec.indices.begin(), spec.indices.end());
        for (std::size_t i = 0; i < base.size(); i += f)
        {
            subset.push_back(base[i]);
        }
        std::sort(subset.begin(), subset.end());
        subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
        if (subset.size() < 4)
        {
            throw ValidationError("density_subsets: factor " + std::to_string(f) + " leaves fewer than 4 vertices");
        }
        out.push_back(std::move(subset));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
    return out;
}

AblationResult vertex_density_ablation(const Dataset& train, const Dataset& test,
                                       std::span<const std::vector<std::uint32_t>> subsets,
                                       std::span<const std::size_t> landmark_positions,
                                       const AblationConfig& config)
{
    config.train.validate();
    if (subsets.empty())
    {
        throw ValidationError("vertex_density_ablation: no vertex subsets");
    }
    std::vector<std::vector<std::uint32_t>> sets;
    for (const auto& s : subsets)
    {
        sets.push_back(sorted_unique(s, "vertex_density_ablation"));
        if (sets.back().size() < 4)
        {
            throw ValidationError("vertex_density_ablation: every subset needs at least 4 vertices");
        }
    }
    std::vector<std::uint32_t> common = sets.front();
    for (const auto& s : sets)
    {
        std::vector<std::uint32_t> next;
        std::set_intersection(common.begin(), common.end(), s.begin(), s.end(), std::back_inserter(next));
        common = std::move(next);
    }
    for (auto idx : train.landmark_spec.indices)
    {
        if (!std::binary_search(common.begin(), common.end(), idx))
        {
            throw ValidationError("vertex_density_ablation: landmark vertex " + std::to_string(idx) +
                                  " missing from a subset");
        }
    }

    AblationResult result;
    result.axis = AblationAxis::VertexDensity;
    for (const auto& s : sets)
    {
        result.grid.push_back(static_cast<double>(s.size()));
    }
    require_grid_increasing(result.grid, "vertex_density_ablation");

    const Dataset reduced = restrict_landmarks(train, landmark_positions);
    const auto inputs = selected_inputs(test, landmark_positions);
    const std::size_t points = sets.size();
    std::vector<std::vector<Summary>> measured(points);
    run_parallel(points, config.threads, [&](std::size_t g) {
        std::vector<std::uint32_t> all(sets[g].size());
        for (std::size_t i = 0; i < all.size(); ++i)
        {
            all[i] = static_cast<std::uint32_t>(i);
        }
        const std::vector<std::vector<std::uint32_t>> measure{all, positions_in(sets[g], common)};
        measured[g] = train_and_measure(reduced, test, sets[g], inputs, measure, config);
    });

    add_summary_series(result, "mae", measured, 0);
    add_summary_series(result, "mae_common", measured, 1);
    return result;
}

AblationResult convergence_curve(const Dataset& train, const TrainConfig& config)
{
    const auto report = train_cascade(train, config).second;
    AblationResult result;
    result.axis = AblationAxis::StageIndex;
    for (std::size_t k = 0; k < report.objective_per_stage.size(); ++k)
    {
        result.grid.push_back(static_cast<double>(k));
    }
    const double base = report.objective_per_stage.front();
    auto& normalized = add_series(result, "objective");
    for (std::size_t k = 0; k < result.grid.size(); ++k)
    {
        normalized.values[k] = base > 0.0 ? report.objective_per_stage[k] / base : 0.0;
    }
    add_series(result, "objective_raw").values = report.objective_per_stage;
    return result;
}

std::vector<LandmarkSet2D> disturbed_inputs(const Dataset& test, double sigma, std::uint64_t seed)
{
    std::vector<LandmarkSet2D> out;
    out.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32), 0xe7a1u};
        std::mt19937_64 rng(seq);
        out.push_back(disturb_landmarks(test.samples[i].landmarks, sigma, rng));
    }
    return out;
}

AblationResult noise_mode_comparison(const Dataset& train, const Dataset& test, double sigma_test,
                                     const TrainConfig& config_clean, const TrainConfig& config_disturbed,
                                     std::uint64_t eval_seed, std::size_t threads)
{
    if (!(sigma_test >= 0.0 && std::isfinite(sigma_test)))
    {
        throw ValidationError("noise_mode_comparison: sigma_test must be finite and non-negative");
    }
    if (!(config_disturbed.noise_std > 0.0))
    {
        throw ValidationError("noise_mode_comparison: the disturbed configuration needs noise_std > 0");
    }
    const auto inputs = disturbed_inputs(test, sigma_test, eval_seed);
    const std::array<const TrainConfig*, 2> configs{&config_clean, &config_disturbed};
    std::array<Summary, 2> measured;
    run_parallel(2, threads, [&](std::size_t m) {
        const CascadeModel model = train_cascade(train, *configs[m]).first;
        const auto predictions = predict_all(model, inputs);
        std::vector<double> values(test.size());
        for (std::size_t i = 0; i < test.size(); ++i)
        {
            values[i] = mae(test.samples[i].shape, predictions[i], true).value;
        }
        measured[m] = summarize(values);
    });
    AblationResult result;
    result.axis = AblationAxis::NoiseMode;
    result.grid = {1.0, 2.0};
    auto& s = add_series(result, "mae");
    for (std::size_t m = 0; m < 2; ++m)
    {
        s.values[m] = measured[m].mean;
        s.stds[m] = measured[m].std;
    }
    return result;
}

std::vector<Shape3D> predict_all(const CascadeModel& model, std::span<const LandmarkSet2D> inputs)
{
    std::vector<Shape3D> out;
    out.reserve(inputs.size());
    for (std::size_t start = 0; start < inputs.size(); start += predict_chunk)
    {
        const std::size_t count = std::min(predict_chunk, inputs.size() - start);
        auto chunk = predict_batch(model, inputs.subspan(start, count));
        for (auto& s : chunk)
        {
            out.push_back(std::move(s));
        }
    }
    return out;
}

} // namespace csr3d
