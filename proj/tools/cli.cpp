/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: tools/cli.cpp
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
#include "cli.hpp"

#include "csr3d/cascade.hpp"
#include "csr3d/error.hpp"
#include "csr3d/io.hpp"
#include "csr3d/kernels.hpp"
#include "csr3d/metrics.hpp"
#include "csr3d/synthdata.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace csr3d::cli {

namespace {

namespace fs = std::filesystem;

struct Globals
{
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out;
};

struct TrainOptions
{
    TrainConfig config;
    double ridge = 0.0;
    CLI::Option* ridge_option = nullptr;
    bool no_fallback = false;

    TrainConfig resolve(std::uint64_t seed) const
    {
        TrainConfig c = config;
        if (ridge_option->count() > 0)
        {
            c.ridge = ridge;
        }
        c.rank_fallback = !no_fallback;
        c.seed = seed;
        return c;
    }
};

void add_train_options(CLI::App* cmd, TrainOptions& t, std::size_t default_stages)
{
    t.config.stages = default_stages;
    cmd->add_option("--stages", t.config.stages, "Cascade stages K")->check(CLI::PositiveNumber);
    t.ridge_option = cmd->add_option("--ridge", t.ridge, "Ridge weight (default: scaled to each stage)")
                         ->check(CLI::NonNegativeNumber);
    cmd->add_option("--noise-std", t.config.noise_std, "Landmark disturbance during training, image units")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--noise-replicas", t.config.noise_replicas, "Disturbed copies per training sample")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--no-fallback", t.no_fallback, "Fail instead of solving ill-conditioned stages by least squares");
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit(const std::string& text, const std::string& path, std::ostream& out)
{
    if (path.empty())
    {
        out << text;
    }
    else
    {
        write_file_atomic(path, text);
    }
}

Dataset load(const std::string& dir, std::ostream& err)
{
    std::vector<std::string> warnings;
    Dataset d = load_dataset(dir, &warnings);
    for (std::size_t i = 0; i < warnings.size() && i < 5; ++i)
    {
        err << "warning: " << dir << ": " << warnings[i] << "\n";
    }
    if (warnings.size() > 5)
    {
        err << "warning: " << dir << ": " << warnings.size() - 5 << " more\n";
    }
    return d;
}

std::vector<std::size_t> parse_list(const std::string& text, const char* what)
{
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        try
        {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(item, &used);
            if (used != item.size())
            {
                throw std::invalid_argument(item);
            }
            out.push_back(static_cast<std::size_t>(v));
        }
        catch (const std::logic_error&)
        {
            throw ValidationError(std::string(what) + ": '" + item + "' is not a non-negative integer");
        }
    }
    if (out.empty())
    {
        throw ValidationError(std::string(what) + ": empty list");
    }
    return out;
}

std::vector<std::uint32_t> facial_component_vertices(const RegionPartition& partition)
{
    std::vector<std::uint32_t> out;
    for (auto r : {Region::Nose, Region::Eyes, Region::Mouth})
    {
        out.insert(out.end(), partition.of(r).begin(), partition.of(r).end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

CascadeModel random_model(std::size_t n, std::size_t l, std::size_t k, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CascadeModel model;
    VertexMatrix mean(static_cast<Eigen::Index>(n), 3);
    for (Eigen::Index i = 0; i < mean.size(); ++i)
    {
        mean.data()[i] = 100.0 * u(rng);
    }
    model.mean_shape = Shape3D(std::move(mean));
    for (std::size_t j = 0; j < l; ++j)
    {
        model.landmark_spec.indices.push_back(static_cast<std::uint32_t>(j * (n / l)));
        model.landmark_spec.regions.push_back(Region::Other);
    }
    model.mean_landmarks = project(model.mean_shape, model.landmark_spec, model.camera, VisibilityMask(l, true));
    model.stages.resize(k);
    for (auto& s : model.stages)
    {
        s.weights.resize(static_cast<Eigen::Index>(3 * n), static_cast<Eigen::Index>(2 * l + 1));
        for (Eigen::Index i = 0; i < s.weights.size(); ++i)
        {
            s.weights.data()[i] = 1e-3 * u(rng);
        }
    }
    return model;
}

int exit_code_for(const Error& e)
{
    switch (e.category())
    {
    case ErrorCategory::Validation: return exit_validation;
    case ErrorCategory::Numerical: return exit_numerical;
    case ErrorCategory::Io: return exit_io;
    }
    return exit_validation;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"csr3d: 3D face shapes from 2D landmarks by cascaded shape-space regression", "csr3d"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--threads", g.threads, "Worker threads for ablation sweeps")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output path (directory for synth)");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic train/test dataset pair");
    std::string scale = "desk";
    ShapeModelConfig shape_cfg;
    std::size_t subjects = 0;
    double train_fraction = 0.8;
    bool emit_landmarks = false;
    synth->add_option("--scale", scale, "Capture protocol")->check(CLI::IsMember({"desk", "paper"}));
    synth->add_option("--vertices", shape_cfg.n_vertices, "Target vertex count")->check(CLI::PositiveNumber);
    synth->add_option("--identity-rank", shape_cfg.identity_rank, "Identity basis rank");
    synth->add_option("--expression-rank", shape_cfg.expression_rank, "Expression basis rank");
    synth->add_option("--subjects", subjects, "Override the protocol's subject count")->check(CLI::PositiveNumber);
    synth->add_option("--train-fraction", train_fraction, "Fraction of subjects used for training")
        ->check(CLI::Range(0.0, 1.0));
    synth->add_flag("--emit-landmarks", emit_landmarks, "Also write each test sample's landmarks as CSV");

    // train
    auto* train = app.add_subcommand("train", "Learn a cascade from a dataset directory");
    std::string train_data;
    TrainOptions train_opts;
    train->add_option("--data", train_data, "Training dataset directory")->required();
    add_train_options(train, train_opts, 5);

    // predict
    auto* pred = app.add_subcommand("predict", "Reconstruct a 3D shape from a landmark CSV");
    std::string model_path;
    std::string landmarks_path;
    std::string emit_obj;
    bool y_down = false;
    bool estimate_vis = false;
    pred->add_option("--model", model_path, "Model file")->required();
    pred->add_option("--landmarks", landmarks_path, "Landmark CSV: index,u,v,visible")->required();
    pred->add_flag("--y-down", y_down, "Input v axis points down (image convention)");
    pred->add_option("--emit-obj", emit_obj, "Also write the reconstruction as OBJ");
    pred->add_flag("--estimate-visibility", estimate_vis, "Drop landmarks the model deems self-occluded");

    // eval
    auto* eval = app.add_subcommand("eval", "Measure a model on a test dataset");
    std::string eval_data;
    std::string error_map_path;
    double eval_noise = 0.0;
    bool no_align = false;
    eval->add_option("--model", model_path, "Model file")->required();
    eval->add_option("--data", eval_data, "Test dataset directory")->required();
    eval->add_option("--noise-std", eval_noise, "Disturb test landmarks, image units")->check(CLI::NonNegativeNumber);
    eval->add_flag("--no-align", no_align, "Measure without Procrustes alignment");
    eval->add_option("--error-map", error_map_path, "Write the mean per-vertex error map as CSV");

    // ablations
    std::string train_dir;
    std::string test_dir;
    double region_radius = 20.0;
    auto add_pair = [&](CLI::App* cmd) {
        cmd->add_option("--train", train_dir, "Training dataset directory")->required();
        cmd->add_option("--test", test_dir, "Test dataset directory")->required();
        cmd->add_option("--region-radius", region_radius, "Region partition radius, mm")->check(CLI::PositiveNumber);
    };
    auto* ab_lm = app.add_subcommand("ablate-landmarks", "MAE against the number of landmarks");
    std::string sizes = "17,34,51,68";
    TrainOptions lm_opts;
    add_pair(ab_lm);
    ab_lm->add_option("--sizes", sizes, "Nested subset sizes, comma-separated");
    add_train_options(ab_lm, lm_opts, 5);

    auto* ab_cov = app.add_subcommand("ablate-coverage", "MAE against the extent of the output mesh");
    std::size_t grid_points = 4;
    TrainOptions cov_opts;
    add_pair(ab_cov);
    ab_cov->add_option("--grid-points", grid_points, "Number of nested vertex sets")->check(CLI::Range(2, 64));
    add_train_options(ab_cov, cov_opts, 5);

    auto* ab_den = app.add_subcommand("ablate-density", "MAE against the density of the output mesh");
    std::string factors = "1,2,4,8";
    TrainOptions den_opts;
    add_pair(ab_den);
    ab_den->add_option("--factors", factors, "Downsampling factors, comma-separated");
    add_train_options(ab_den, den_opts, 5);

    auto* conv = app.add_subcommand("convergence", "Training objective per stage");
    std::string conv_data;
    TrainOptions conv_opts;
    conv->add_option("--data", conv_data, "Training dataset directory")->required();
    add_train_options(conv, conv_opts, 10);

    auto* cmp = app.add_subcommand("compare-noise", "Clean-trained against disturbance-trained cascades");
    double sigma_ratio = 0.11;
    double sigma = 0.0;
    CLI::Option* sigma_opt = nullptr;
    TrainOptions cmp_opts;
    add_pair(cmp);
    cmp->add_option("--sigma-ratio", sigma_ratio, "Disturbance as a fraction of the inter-eye distance")
        ->check(CLI::NonNegativeNumber);
    sigma_opt = cmp->add_option("--sigma", sigma, "Disturbance in image units (overrides --sigma-ratio)")
                    ->check(CLI::NonNegativeNumber);
    add_train_options(cmp, cmp_opts, 5);
    cmp_opts.config.noise_replicas = 5;

    auto* obj = app.add_subcommand("export-obj", "Write a mesh as OBJ");
    std::string obj_model;
    std::string obj_data;
    std::size_t obj_index = 0;
    auto* obj_model_opt = obj->add_option("--model", obj_model, "Export the model's mean shape");
    auto* obj_data_opt = obj->add_option("--data", obj_data, "Export a dataset sample");
    obj_model_opt->excludes(obj_data_opt);
    obj->add_option("--index", obj_index, "Sample index with --data");

    auto* bench = app.add_subcommand("bench", "Inference latency with random weights");
    std::size_t bench_n = 53215;
    std::size_t bench_l = 68;
    std::size_t bench_k = 5;
    std::size_t bench_images = 16;
    std::size_t bench_batch = 32;
    std::string bench_isa = "auto";
    bench->add_option("--vertices", bench_n, "n")->check(CLI::PositiveNumber);
    bench->add_option("--landmarks", bench_l, "l")->check(CLI::Range(4, 100000));
    bench->add_option("--stages", bench_k, "K")->check(CLI::PositiveNumber);
    bench->add_option("--images", bench_images, "Timed single-image predictions")->check(CLI::PositiveNumber);
    bench->add_option("--batch", bench_batch, "Batch size for the throughput run")->check(CLI::PositiveNumber);
    bench->add_option("--isa", bench_isa, "Kernel variant")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp&)
    {
        out << app.help();
        return exit_ok;
    }
    catch (const CLI::ParseError& e)
    {
        err << "error: " << e.what() << "\n" << app.help();
        return exit_validation;
    }

    try
    {
        if (*synth)
        {
            const fs::path dir = g.out.empty() ? fs::path("data") : fs::path(g.out);
            shape_cfg.seed = g.seed;
            const ShapeModel model = build_shape_model(shape_cfg);
            DatasetConfig cfg = scale == "paper" ? paper_scale_config(g.seed) : desk_scale_config(g.seed);
            if (subjects > 0)
            {
                cfg.subjects = subjects;
            }
            const Dataset all = generate_dataset(model, cfg);
            const auto [tr, te] = split(all, train_fraction, g.seed);
            save_dataset(tr, dir / "train");
            save_dataset(te, dir / "test");
            if (emit_landmarks)
            {
                const fs::path lm_dir = dir / "landmarks";
                fs::create_directories(lm_dir);
                for (std::size_t i = 0; i < te.size(); ++i)
                {
                    char name[32];
                    std::snprintf(name, sizeof(name), "test_%05zu.csv", i);
                    write_file_atomic(lm_dir / name, landmarks_csv(te.samples[i].landmarks));
                }
            }
            out << "vertices," << model.vertex_count() << "\n"
                << "landmarks," << model.landmark_spec.size() << "\n"
                << "camera_scale," << fmt(all.camera_scale) << "\n"
                << "train_samples," << tr.size() << "\n"
                << "test_samples," << te.size() << "\n";
        }
        else if (*train)
        {
            const Dataset d = load(train_data, err);
            const auto [model, report] = train_cascade(d, train_opts.resolve(g.seed));
            save_model(model, g.out.empty() ? "model.csr3d" : g.out);
            out << "stage,objective,ridge,fallback\n";
            out << "0," << fmt(report.objective_per_stage[0]) << ",0,0\n";
            for (std::size_t k = 0; k < model.stage_count(); ++k)
            {
                out << k + 1 << "," << fmt(report.objective_per_stage[k + 1]) << "," << fmt(report.ridge_per_stage[k])
                    << "," << (report.fallback_per_stage[k] ? 1 : 0) << "\n";
            }
        }
        else if (*pred)
        {
            const CascadeModel model = load_model(model_path);
            LandmarkSet2D input = import_landmarks(landmarks_path, model.landmark_count(), y_down);
            if (estimate_vis)
            {
                input = mask_to_reference(input, estimate_visibility_for_input(model, input));
            }
            const Shape3D shape = predict(model, input);
            std::string text = "x,y,z\n";
            for (Eigen::Index i = 0; i < shape.vertices().rows(); ++i)
            {
                text += fmt(shape.vertices()(i, 0)) + "," + fmt(shape.vertices()(i, 1)) + "," +
                        fmt(shape.vertices()(i, 2)) + "\n";
            }
            if (!emit_obj.empty())
            {
                export_obj(shape, model.topology, emit_obj);
            }
            emit(text, g.out, out);
        }
        else if (*eval)
        {
            const CascadeModel model = load_model(model_path);
            const Dataset d = load(eval_data, err);
            if (d.vertex_count() != model.vertex_count() || d.landmark_count() != model.landmark_count())
            {
                throw StructuralError("eval: dataset and model dimensions differ");
            }
            const auto inputs = disturbed_inputs(d, eval_noise, g.seed);
            const auto predictions = predict_all(model, inputs);
            const RegionPartition partition = region_partition(model.mean_shape, model.landmark_spec, region_radius);
            std::vector<double> maes;
            std::vector<double> npdes;
            std::array<std::vector<double>, 4> regions;
            std::vector<double> mean_map(model.vertex_count(), 0.0);
            for (std::size_t i = 0; i < d.size(); ++i)
            {
                const auto m = mae(d.samples[i].shape, predictions[i], !no_align);
                maes.push_back(m.value);
                npdes.push_back(npde(d.samples[i].shape, predictions[i]).value);
                const auto r = region_mae(d.samples[i].shape, predictions[i], partition, !no_align);
                for (std::size_t k = 0; k < 4; ++k)
                {
                    regions[k].push_back(r.value[k]);
                }
                for (std::size_t j = 0; j < mean_map.size(); ++j)
                {
                    mean_map[j] += m.map.per_vertex[j] / static_cast<double>(d.size());
                }
            }
            AblationResult report;
            report.axis = AblationAxis::StageIndex;
            report.grid = {static_cast<double>(model.stage_count())};
            auto add = [&](const std::string& name, const std::vector<double>& values) {
                const Summary s = summarize(values);
                report.series.push_back({name, {s.mean}, {s.std}});
            };
            add("mae", maes);
            add("npde", npdes);
            for (auto r : all_regions)
            {
                add("mae_" + std::string(region_name(r)), regions[static_cast<std::size_t>(r)]);
            }
            if (!error_map_path.empty())
            {
                write_file_atomic(error_map_path, error_map_csv(ErrorMap::from_values(mean_map)));
            }
            emit(report_csv(report), g.out, out);
        }
        else if (*ab_lm || *ab_cov || *ab_den)
        {
            const Dataset tr = load(train_dir, err);
            const Dataset te = load(test_dir, err);
            AblationConfig cfg;
            cfg.threads = g.threads;
            cfg.region_radius = region_radius;
            AblationResult result;
            if (*ab_lm)
            {
                cfg.train = lm_opts.resolve(g.seed);
                const auto list = parse_list(sizes, "--sizes");
                const auto subsets = default_landmark_nesting(tr.landmark_count(), list);
                result = landmark_ablation(tr, te, subsets, cfg);
            }
            else
            {
                const Shape3D reference = init_state(tr).mean_shape;
                const RegionPartition partition = region_partition(reference, tr.landmark_spec, region_radius);
                const auto positions = facial_component_landmarks(tr.landmark_spec);
                if (*ab_cov)
                {
                    cfg.train = cov_opts.resolve(g.seed);
                    const auto subsets = default_coverage_subsets(reference, tr.landmark_spec, partition, grid_points);
                    result = vertex_coverage_ablation(tr, te, subsets, positions, cfg);
                }
                else
                {
                    cfg.train = den_opts.resolve(g.seed);
                    const auto list = parse_list(factors, "--factors");
                    const auto subsets =
                        density_subsets(facial_component_vertices(partition), tr.landmark_spec, list);
                    result = vertex_density_ablation(tr, te, subsets, positions, cfg);
                }
            }
            emit(report_csv(result), g.out, out);
        }
        else if (*conv)
        {
            const Dataset d = load(conv_data, err);
            emit(report_csv(convergence_curve(d, conv_opts.resolve(g.seed))), g.out, out);
        }
        else if (*cmp)
        {
            const Dataset tr = load(train_dir, err);
            const Dataset te = load(test_dir, err);
            const double s = sigma_opt->count() > 0 ? sigma : sigma_ratio * image_inter_eye_distance(tr);
            TrainConfig clean = cmp_opts.resolve(g.seed);
            clean.noise_std = 0.0;
            TrainConfig disturbed = cmp_opts.resolve(g.seed);
            disturbed.noise_std = s;
            err << "sigma " << fmt(s) << "\n";
            emit(report_csv(noise_mode_comparison(tr, te, s, clean, disturbed, g.seed, g.threads)), g.out, out);
        }
        else if (*obj)
        {
            if (g.out.empty())
            {
                throw ValidationError("export-obj: --out is required");
            }
            if (obj_model_opt->count() > 0)
            {
                const CascadeModel model = load_model(obj_model);
                export_obj(model.mean_shape, model.topology, g.out);
            }
            else if (obj_data_opt->count() > 0)
            {
                const Dataset d = load(obj_data, err);
                if (obj_index >= d.size())
                {
                    throw ValidationError("export-obj: index " + std::to_string(obj_index) + " out of range");
                }
                export_obj(d.samples[obj_index].shape, d.topology, g.out);
            }
            else
            {
                throw ValidationError("export-obj: one of --model or --data is required");
            }
        }
        else if (*bench)
        {
            std::optional<kernels::ScopedIsa> isa_scope;
            if (bench_isa == "scalar")
            {
                isa_scope.emplace(kernels::Isa::Scalar);
            }
            else if (bench_isa == "avx2")
            {
                if (!kernels::isa_supported(kernels::Isa::Avx2))
                {
                    throw ValidationError("bench: avx2 kernels are not available on this machine");
                }
                isa_scope.emplace(kernels::Isa::Avx2);
            }
            const std::size_t n = bench_n;
            const std::size_t l = bench_l;
            if (l > n)
            {
                throw ValidationError("bench: more landmarks than vertices");
            }
            const CascadeModel model = random_model(n, l, bench_k, g.seed);
            std::vector<LandmarkSet2D> inputs;
            std::mt19937_64 rng(g.seed + 1);
            std::normal_distribution<double> jitter(0.0, 5.0);
            for (std::size_t b = 0; b < std::max(bench_batch, bench_images); ++b)
            {
                PointMatrix p = model.mean_landmarks.points();
                for (Eigen::Index i = 0; i < p.size(); ++i)
                {
                    p.data()[i] += jitter(rng);
                }
                inputs.emplace_back(std::move(p), VisibilityMask(l, true));
            }
            using clock = std::chrono::steady_clock;
            volatile double sink = predict(model, inputs[0]).vertices()(0, 0);
            const auto t0 = clock::now();
            for (std::size_t i = 0; i < bench_images; ++i)
            {
                sink = sink + predict(model, inputs[i]).vertices()(0, 0);
            }
            const double single_ms =
                std::chrono::duration<double, std::milli>(clock::now() - t0).count() / static_cast<double>(bench_images);
            const auto t1 = clock::now();
            const auto batch_out = predict_batch(model, std::span<const LandmarkSet2D>(inputs).first(bench_batch));
            const double batch_ms =
                std::chrono::duration<double, std::milli>(clock::now() - t1).count() / static_cast<double>(bench_batch);
            sink = sink + batch_out.front().vertices()(0, 0);
            const std::string isa(kernels::isa_name(kernels::active_isa()));
            std::string text = "mode,isa,n,l,K,images,ms_per_image,images_per_second\n";
            auto row = [&](const char* mode, std::size_t images, double ms) {
                text += std::string(mode) + "," + isa + "," + std::to_string(n) + "," + std::to_string(l) + "," +
                        std::to_string(bench_k) + "," + std::to_string(images) + "," + fmt(ms) + "," +
                        fmt(1000.0 / ms) + "\n";
            };
            row("single", bench_images, single_ms);
            row("batch", bench_batch, batch_ms);
            emit(text, g.out, out);
        }
        return exit_ok;
    }
    catch (const Error& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    catch (const fs::filesystem_error& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_io;
    }
    catch (const std::bad_alloc&)
    {
        err << "error: out of memory\n";
        return exit_numerical;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    }
}

} // namespace csr3d::cli
