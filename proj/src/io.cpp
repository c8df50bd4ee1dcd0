/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: src/io.cpp
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
#include "csr3d/io.hpp"
#include "csr3d/error.hpp"
#include "csr3d/fnv1a.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

namespace csr3d {

namespace {

using json = nlohmann::json;

class ByteWriter
{
public:
    template <typename T>
    void put(T value)
    {
        std::uint64_t bits = 0;
        if constexpr (std::is_floating_point_v<T>)
        {
            bits = std::bit_cast<std::uint64_t>(static_cast<double>(value));
        }
        else
        {
            bits = static_cast<std::uint64_t>(value);
        }
        constexpr std::size_t width = std::is_floating_point_v<T> ? 8 : sizeof(T);
        for (std::size_t i = 0; i < width; ++i)
        {
            bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }

    void put_doubles(std::span<const double> values)
    {
        for (auto v : values)
        {
            put(v);
        }
    }

    std::vector<std::uint8_t> bytes;
};

class ByteReader
{
public:
    ByteReader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

    template <typename T>
    T get()
    {
        constexpr std::size_t width = std::is_floating_point_v<T> ? 8 : sizeof(T);
        need(width);
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < width; ++i)
        {
            bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += width;
        if constexpr (std::is_floating_point_v<T>)
        {
            return std::bit_cast<double>(bits);
        }
        else
        {
            return static_cast<T>(bits);
        }
    }

    void get_doubles(std::span<double> out)
    {
        need(out.size() * 8);
        for (auto& v : out)
        {
            v = get<double>();
        }
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t count) const
    {
        if (remaining() < count)
        {
            throw FormatError(FormatFailure::Truncated, std::string(what_) + ": unexpected end of data");
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    const char* what_;
};

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b)
{
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
    {
        throw FormatError(FormatFailure::InvalidContent, "declared dimensions overflow");
    }
    return a * b;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b)
{
    if (b > std::numeric_limits<std::uint64_t>::max() - a)
    {
        throw FormatError(FormatFailure::InvalidContent, "declared dimensions overflow");
    }
    return a + b;
}

Region region_from_byte(std::uint8_t b)
{
    if (b > static_cast<std::uint8_t>(Region::Other))
    {
        throw FormatError(FormatFailure::InvalidContent, "unknown region label " + std::to_string(b));
    }
    return static_cast<Region>(b);
}

Region region_from_name(const std::string& name)
{
    for (auto r : all_regions)
    {
        if (region_name(r) == name)
        {
            return r;
        }
    }
    throw FormatError(FormatFailure::InvalidContent, "unknown region name " + name);
}

std::string io_context(const std::filesystem::path& path, const std::string& what)
{
    return what + ": " + path.string();
}

void rethrow_with_path(const FormatError& e, const std::filesystem::path& path)
{
    throw FormatError(e.failure(), std::string(e.what()) + " (" + path.string() + ")");
}

std::string format_double(double v, int digits)
{
    char buf[64];
    const int len = std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return std::string(buf, static_cast<std::size_t>(len));
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace

std::vector<std::uint8_t> encode_model(const CascadeModel& model)
{
    model.validate();
    const std::size_t n = model.vertex_count();
    const std::size_t l = model.landmark_count();
    const std::size_t k = model.stage_count();
    if (n > std::numeric_limits<std::uint32_t>::max() || k > std::numeric_limits<std::uint16_t>::max())
    {
        throw StructuralError("encode_model: dimensions exceed the file format");
    }
    std::uint16_t flags = model_has_extras;
    if (model.landmark_normals.rows() != 0)
    {
        flags |= model_has_normals;
    }
    if (!model.topology.empty())
    {
        flags |= model_has_topology;
    }

    ByteWriter header;
    for (char c : model_magic)
    {
        header.put(static_cast<std::uint8_t>(c));
    }
    header.put(model_format_version);
    header.put(static_cast<std::uint32_t>(n));
    header.put(static_cast<std::uint32_t>(l));
    header.put(static_cast<std::uint16_t>(k));
    header.put(flags);

    ByteWriter payload;
    payload.bytes.reserve(8 + 5 * l + 24 * n * (1 + k * (2 * l + 1)) + 64 * l);
    payload.put(model.camera.scale());
    for (auto idx : model.landmark_spec.indices)
    {
        payload.put(idx);
    }
    for (auto r : model.landmark_spec.regions)
    {
        payload.put(static_cast<std::uint8_t>(r));
    }
    payload.put_doubles(model.mean_shape.flat());
    for (const auto& stage : model.stages)
    {
        payload.put_doubles({stage.weights.data(), static_cast<std::size_t>(stage.weights.size())});
    }
    payload.put(model.train_fingerprint);
    payload.put_doubles(model.mean_landmarks.flat());
    for (std::size_t j = 0; j < l; ++j)
    {
        payload.put(static_cast<std::uint8_t>(model.mean_landmarks.visible(j)));
    }
    if (flags & model_has_normals)
    {
        for (std::size_t j = 0; j < l; ++j)
        {
            for (int c = 0; c < 3; ++c)
            {
                payload.put(model.landmark_normals(static_cast<Eigen::Index>(j), c));
            }
        }
    }
    if (flags & model_has_topology)
    {
        payload.put(static_cast<std::uint32_t>(model.topology.triangles.size()));
        for (const auto& t : model.topology.triangles)
        {
            payload.put(t[0]);
            payload.put(t[1]);
            payload.put(t[2]);
        }
    }

    std::vector<std::uint8_t> out = std::move(header.bytes);
    out.insert(out.end(), payload.bytes.begin(), payload.bytes.end());
    ByteWriter trailer;
    trailer.put(fnv1a64(payload.bytes));
    out.insert(out.end(), trailer.bytes.begin(), trailer.bytes.end());
    return out;
}

CascadeModel decode_model(std::span<const std::uint8_t> bytes)
{
    // A prefix of the magic is a cut-short file, anything else is not a model.
    const std::size_t prefix = std::min(bytes.size(), model_magic.size());
    if (!std::equal(model_magic.begin(), model_magic.begin() + static_cast<std::ptrdiff_t>(prefix), bytes.begin(),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }))
    {
        throw FormatError(FormatFailure::BadMagic, "model file: bad magic");
    }
    if (bytes.size() < model_header_size)
    {
        throw FormatError(FormatFailure::Truncated, "model file: " + std::to_string(bytes.size()) +
                                                        " bytes, shorter than the header");
    }
    ByteReader header(bytes.first(std::min(bytes.size(), model_header_size)), "model header");
    for (std::size_t i = 0; i < model_magic.size(); ++i)
    {
        header.get<std::uint8_t>();
    }
    const auto version = header.get<std::uint16_t>();
    if (version != model_format_version)
    {
        throw FormatError(FormatFailure::VersionMismatch, "model file: version " + std::to_string(version) +
                                                              ", expected " +
                                                              std::to_string(model_format_version));
    }
    const std::uint64_t n = header.get<std::uint32_t>();
    const std::uint64_t l = header.get<std::uint32_t>();
    const std::uint64_t k = header.get<std::uint16_t>();
    const auto flags = header.get<std::uint16_t>();
    if (flags & ~(model_has_extras | model_has_topology | model_has_normals))
    {
        throw FormatError(FormatFailure::InvalidContent, "model file: unknown flag bits");
    }

    // Expected length from the header alone, plus the triangle count if present.
    std::uint64_t expected = 8 + 5 * l;
    expected = checked_add(expected, checked_mul(24, n));
    expected = checked_add(expected, checked_mul(checked_mul(checked_mul(24, n), 2 * l + 1), k));
    if (flags & model_has_extras)
    {
        expected = checked_add(expected, 8 + 17 * l);
    }
    if (flags & model_has_normals)
    {
        expected = checked_add(expected, 24 * l);
    }
    if (flags & model_has_topology)
    {
        const std::uint64_t count_at = model_header_size + expected;
        if (bytes.size() < count_at + 4)
        {
            throw FormatError(FormatFailure::Truncated, "model file: truncated before the triangle list");
        }
        ByteReader count_reader(bytes.subspan(count_at, 4), "model file");
        expected = checked_add(expected, checked_add(4, checked_mul(12, count_reader.get<std::uint32_t>())));
    }
    const std::uint64_t total = checked_add(model_header_size + 8, expected);
    if (bytes.size() < total)
    {
        throw FormatError(FormatFailure::Truncated, "model file: " + std::to_string(bytes.size()) +
                                                        " bytes, header declares " + std::to_string(total));
    }
    if (bytes.size() > total)
    {
        throw FormatError(FormatFailure::LengthMismatch, "model file: " + std::to_string(bytes.size()) +
                                                             " bytes, header declares " + std::to_string(total));
    }
    const auto payload = bytes.subspan(model_header_size, expected);
    ByteReader trailer(bytes.subspan(model_header_size + expected, 8), "model file");
    if (trailer.get<std::uint64_t>() != fnv1a64(payload))
    {
        throw FormatError(FormatFailure::ChecksumMismatch, "model file: payload checksum mismatch");
    }

    ByteReader in(payload, "model payload");
    CascadeModel model;
    const double scale = in.get<double>();
    if (!(scale > 0.0 && std::isfinite(scale)))
    {
        throw FormatError(FormatFailure::InvalidContent, "model file: invalid camera scale");
    }
    model.camera = WeakPerspectiveCamera(scale);
    model.landmark_spec.indices.resize(l);
    model.landmark_spec.regions.resize(l);
    for (auto& idx : model.landmark_spec.indices)
    {
        idx = in.get<std::uint32_t>();
    }
    for (auto& r : model.landmark_spec.regions)
    {
        r = region_from_byte(in.get<std::uint8_t>());
    }
    std::vector<double> flat(3 * n);
    in.get_doubles(flat);
    try
    {
        model.mean_shape = Shape3D::from_flat(flat);
    }
    catch (const Error& e)
    {
        throw FormatError(FormatFailure::InvalidContent, std::string("model file: ") + e.what());
    }
    model.stages.resize(k);
    for (auto& stage : model.stages)
    {
        stage.weights.resize(static_cast<Eigen::Index>(3 * n), static_cast<Eigen::Index>(2 * l + 1));
        in.get_doubles({stage.weights.data(), static_cast<std::size_t>(stage.weights.size())});
    }
    PointMatrix mean_points(static_cast<Eigen::Index>(l), 2);
    VisibilityMask mean_visible(l, true);
    if (flags & model_has_extras)
    {
        model.train_fingerprint = in.get<std::uint64_t>();
        in.get_doubles({mean_points.data(), static_cast<std::size_t>(mean_points.size())});
        for (std::size_t j = 0; j < l; ++j)
        {
            mean_visible[j] = in.get<std::uint8_t>() != 0;
        }
    }
    else
    {
        mean_points = project(model.mean_shape, model.landmark_spec, model.camera, mean_visible).points();
    }
    if (flags & model_has_normals)
    {
        model.landmark_normals.resize(static_cast<Eigen::Index>(l), 3);
        for (std::size_t j = 0; j < l; ++j)
        {
            for (int c = 0; c < 3; ++c)
            {
                model.landmark_normals(static_cast<Eigen::Index>(j), c) = in.get<double>();
            }
        }
    }
    if (flags & model_has_topology)
    {
        model.topology.triangles.resize(in.get<std::uint32_t>());
        for (auto& t : model.topology.triangles)
        {
            t = {in.get<std::uint32_t>(), in.get<std::uint32_t>(), in.get<std::uint32_t>()};
        }
    }
    try
    {
        model.mean_landmarks = LandmarkSet2D(std::move(mean_points), std::move(mean_visible));
        model.validate();
    }
    catch (const FormatError&)
    {
        throw;
    }
    catch (const Error& e)
    {
        throw FormatError(FormatFailure::InvalidContent, std::string("model file: ") + e.what());
    }
    return model;
}

void save_model(const CascadeModel& model, const std::filesystem::path& path)
{
    write_file_atomic(path, encode_model(model));
}

CascadeModel load_model(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    try
    {
        return decode_model(bytes);
    }
    catch (const FormatError& e)
    {
        rethrow_with_path(e, path);
    }
    return {};
}

std::size_t dataset_record_stride(std::size_t n, std::size_t l) noexcept
{
    return 4 + 8 + 8 + 1 + 24 * n + 16 * l + l;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir)
{
    dataset.validate();
    const std::size_t n = dataset.vertex_count();
    const std::size_t l = dataset.landmark_count();
    const std::size_t stride = dataset_record_stride(n, l);

    ByteWriter records;
    records.bytes.reserve(stride * dataset.size());
    for (const auto& s : dataset.samples)
    {
        records.put(s.subject);
        records.put(s.yaw);
        records.put(s.pitch);
        records.put(static_cast<std::uint8_t>(s.frontal_neutral));
        records.put_doubles(s.shape.flat());
        records.put_doubles(s.landmarks.flat());
        for (std::size_t j = 0; j < l; ++j)
        {
            records.put(static_cast<std::uint8_t>(s.landmarks.visible(j)));
        }
    }

    json manifest;
    manifest["format"] = "csr3d-dataset";
    manifest["version"] = 1;
    manifest["count"] = dataset.size();
    manifest["n_vertices"] = n;
    manifest["n_landmarks"] = l;
    manifest["units"] = {{"shape", "mm"}, {"landmarks", "image"}, {"angles", "degrees"}};
    manifest["camera_scale"] = dataset.camera_scale;
    manifest["seed"] = dataset.seed;
    manifest["record_stride"] = stride;
    manifest["records_fnv1a64"] = fnv1a64(records.bytes);
    manifest["landmark_indices"] = dataset.landmark_spec.indices;
    std::vector<std::string> regions;
    for (auto r : dataset.landmark_spec.regions)
    {
        regions.emplace_back(region_name(r));
    }
    manifest["landmark_regions"] = regions;
    if (dataset.provenance)
    {
        const auto& p = *dataset.provenance;
        manifest["provenance"] = {{"n_vertices", p.n_vertices},
                                  {"identity_rank", p.identity_rank},
                                  {"expression_rank", p.expression_rank},
                                  {"seed", p.seed}};
    }
    else
    {
        manifest["provenance"] = nullptr;
    }

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
    {
        throw IoError(io_context(dir, "cannot create dataset directory (" + ec.message() + ")"));
    }
    write_file_atomic(dir / dataset_records_name, records.bytes);
    write_file_atomic(dir / dataset_manifest_name, manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir, std::vector<std::string>* warnings)
{
    const auto manifest_path = dir / dataset_manifest_name;
    const auto manifest_bytes = read_file(manifest_path);
    json manifest;
    try
    {
        manifest = json::parse(manifest_bytes.begin(), manifest_bytes.end());
    }
    catch (const json::exception& e)
    {
        throw FormatError(FormatFailure::InvalidContent, io_context(manifest_path, std::string("bad manifest: ") + e.what()));
    }

    Dataset dataset;
    std::size_t count = 0;
    std::size_t n = 0;
    std::size_t l = 0;
    std::uint64_t checksum = 0;
    try
    {
        if (manifest.at("format").get<std::string>() != "csr3d-dataset")
        {
            throw FormatError(FormatFailure::BadMagic, io_context(manifest_path, "not a csr3d dataset manifest"));
        }
        if (manifest.at("version").get<int>() != 1)
        {
            throw FormatError(FormatFailure::VersionMismatch, io_context(manifest_path, "unsupported manifest version"));
        }
        count = manifest.at("count").get<std::size_t>();
        n = manifest.at("n_vertices").get<std::size_t>();
        l = manifest.at("n_landmarks").get<std::size_t>();
        dataset.camera_scale = manifest.at("camera_scale").get<double>();
        dataset.seed = manifest.at("seed").get<std::uint64_t>();
        checksum = manifest.at("records_fnv1a64").get<std::uint64_t>();
        if (manifest.at("record_stride").get<std::size_t>() != dataset_record_stride(n, l))
        {
            throw FormatError(FormatFailure::LengthMismatch, io_context(manifest_path, "record stride disagrees with n and l"));
        }
        dataset.landmark_spec.indices = manifest.at("landmark_indices").get<std::vector<std::uint32_t>>();
        for (const auto& name : manifest.at("landmark_regions").get<std::vector<std::string>>())
        {
            dataset.landmark_spec.regions.push_back(region_from_name(name));
        }
        const auto& p = manifest.at("provenance");
        if (!p.is_null())
        {
            dataset.provenance = ShapeModelConfig{p.at("n_vertices").get<std::size_t>(),
                                                  p.at("identity_rank").get<std::size_t>(),
                                                  p.at("expression_rank").get<std::size_t>(),
                                                  p.at("seed").get<std::uint64_t>()};
        }
    }
    catch (const json::exception& e)
    {
        throw FormatError(FormatFailure::InvalidContent, io_context(manifest_path, std::string("bad manifest: ") + e.what()));
    }
    if (dataset.landmark_spec.indices.size() != l || dataset.landmark_spec.regions.size() != l)
    {
        throw FormatError(FormatFailure::InvalidContent, io_context(manifest_path, "landmark lists disagree with n_landmarks"));
    }

    const auto records_path = dir / dataset_records_name;
    const auto records = read_file(records_path);
    const std::size_t stride = dataset_record_stride(n, l);
    if (records.size() != count * stride)
    {
        throw FormatError(records.size() < count * stride ? FormatFailure::Truncated : FormatFailure::LengthMismatch,
                          io_context(records_path, "holds " + std::to_string(records.size()) + " bytes, manifest declares " +
                                                       std::to_string(count) + " records of " + std::to_string(stride)));
    }
    if (fnv1a64(records) != checksum)
    {
        throw FormatError(FormatFailure::ChecksumMismatch, io_context(records_path, "checksum mismatch"));
    }

    ByteReader in(records, "dataset records");
    dataset.samples.reserve(count);
    std::vector<double> flat(3 * n);
    for (std::size_t i = 0; i < count; ++i)
    {
        Sample s;
        s.subject = in.get<std::uint32_t>();
        s.yaw = in.get<double>();
        s.pitch = in.get<double>();
        s.frontal_neutral = in.get<std::uint8_t>() != 0;
        in.get_doubles(flat);
        PointMatrix points(static_cast<Eigen::Index>(l), 2);
        in.get_doubles({points.data(), static_cast<std::size_t>(points.size())});
        VisibilityMask visible(l);
        for (std::size_t j = 0; j < l; ++j)
        {
            visible[j] = in.get<std::uint8_t>() != 0;
            const auto r = static_cast<Eigen::Index>(j);
            if (!visible[j] && (points(r, 0) != 0.0 || points(r, 1) != 0.0))
            {
                throw FormatError(FormatFailure::InvalidContent,
                                  io_context(records_path, "record " + std::to_string(i) + ": invisible landmark " +
                                                               std::to_string(j) + " is not zero-filled"));
            }
            if (visible[j] && points(r, 0) == 0.0 && points(r, 1) == 0.0 && warnings)
            {
                warnings->push_back("record " + std::to_string(i) + ": visible landmark " + std::to_string(j) +
                                    " lies exactly at (0, 0)");
            }
        }
        try
        {
            s.shape = Shape3D::from_flat(flat);
            s.landmarks = LandmarkSet2D(std::move(points), std::move(visible));
        }
        catch (const Error& e)
        {
            throw FormatError(FormatFailure::InvalidContent,
                              io_context(records_path, "record " + std::to_string(i) + ": " + e.what()));
        }
        dataset.samples.push_back(std::move(s));
    }

    if (dataset.provenance)
    {
        MeshTopology topology = build_shape_model(*dataset.provenance).topology;
        try
        {
            topology.validate(n);
        }
        catch (const Error&)
        {
            throw FormatError(FormatFailure::InvalidContent,
                              io_context(manifest_path, "provenance does not reproduce a mesh of " + std::to_string(n) + " vertices"));
        }
        dataset.topology = std::move(topology);
    }
    try
    {
        dataset.validate();
    }
    catch (const FormatError&)
    {
        throw;
    }
    catch (const Error& e)
    {
        throw FormatError(FormatFailure::InvalidContent, io_context(dir, e.what()));
    }
    return dataset;
}

std::string obj_text(const Shape3D& shape, const MeshTopology& topology)
{
    topology.validate(shape.size());
    std::string out;
    out.reserve(shape.size() * 48 + topology.triangles.size() * 24);
    const auto& v = shape.vertices();
    for (Eigen::Index i = 0; i < v.rows(); ++i)
    {
        out += "v " + format_double(v(i, 0), 9) + " " + format_double(v(i, 1), 9) + " " + format_double(v(i, 2), 9) +
               "\n";
    }
    for (const auto& t : topology.triangles)
    {
        out += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
    }
    return out;
}

void export_obj(const Shape3D& shape, const MeshTopology& topology, const std::filesystem::path& path)
{
    write_file_atomic(path, obj_text(shape, topology));
}

LandmarkSet2D parse_landmarks_csv(std::string_view text, std::size_t landmark_count, bool y_down)
{
    PointMatrix points = PointMatrix::Zero(static_cast<Eigen::Index>(landmark_count), 2);
    VisibilityMask visible(landmark_count, false);
    std::vector<std::size_t> seen_at(landmark_count, 0);

    std::size_t line_no = 0;
    while (!text.empty())
    {
        const auto eol = text.find('\n');
        const std::string_view line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (line.empty() || (line_no == 1 && line == "index,u,v,visible"))
        {
            continue;
        }
        std::array<std::string_view, 4> fields;
        std::size_t count = 0;
        std::string_view rest = line;
        while (true)
        {
            const auto comma = rest.find(',');
            if (count == fields.size())
            {
                throw ParseError("landmarks line " + std::to_string(line_no) + ": expected 4 fields", line_no);
            }
            fields[count++] = trim(rest.substr(0, comma));
            if (comma == std::string_view::npos)
            {
                break;
            }
            rest = rest.substr(comma + 1);
        }
        if (count != fields.size())
        {
            throw ParseError("landmarks line " + std::to_string(line_no) + ": expected 4 fields", line_no);
        }

        std::size_t index = 0;
        auto [ip, iec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), index);
        if (iec != std::errc() || ip != fields[0].data() + fields[0].size())
        {
            throw ParseError("landmarks line " + std::to_string(line_no) + ": bad index '" + std::string(fields[0]) + "'",
                             line_no);
        }
        if (index >= landmark_count)
        {
            throw ParseError("landmarks line " + std::to_string(line_no) + ": index " + std::to_string(index) +
                                 " out of range [0, " + std::to_string(landmark_count) + ")",
                             line_no);
        }
        if (seen_at[index] != 0)
        {
            throw ParseError("landmarks line " + std::to_string(line_no) + ": index " + std::to_string(index) +
                                 " already given on line " + std::to_string(seen_at[index]),
                             line_no);
        }
        std::array<double, 2> uv{};
        for (std::size_t c = 0; c < 2; ++c)
        {
            const auto f = fields[1 + c];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), uv[c]);
            if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(uv[c]))
            {
                throw ParseError("landmarks line " + std::to_string(line_no) + ": bad coordinate '" + std::string(f) +
                                     "'",
                                 line_no);
            }
        }
        if (fields[3] != "0" && fields[3] != "1")
        {
            throw ParseError("landmarks line " + std::to_string(line_no) + ": visible must be 0 or 1", line_no);
        }
        seen_at[index] = line_no;
        const auto r = static_cast<Eigen::Index>(index);
        points(r, 0) = uv[0];
        points(r, 1) = y_down ? -uv[1] : uv[1];
        visible[index] = fields[3] == "1";
    }
    for (std::size_t j = 0; j < landmark_count; ++j)
    {
        if (seen_at[j] == 0)
        {
            throw ParseError("landmarks: index " + std::to_string(j) + " is missing", 0);
        }
    }
    return LandmarkSet2D(std::move(points), std::move(visible));
}

LandmarkSet2D import_landmarks(const std::filesystem::path& path, std::size_t landmark_count, bool y_down)
{
    const auto bytes = read_file(path);
    try
    {
        return parse_landmarks_csv({reinterpret_cast<const char*>(bytes.data()), bytes.size()}, landmark_count,
                                   y_down);
    }
    catch (const ParseError& e)
    {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

std::string landmarks_csv(const LandmarkSet2D& landmarks, bool y_down)
{
    std::string out = "index,u,v,visible\n";
    for (std::size_t j = 0; j < landmarks.size(); ++j)
    {
        const auto r = static_cast<Eigen::Index>(j);
        const double v = landmarks.points()(r, 1);
        out += std::to_string(j) + "," + format_double(landmarks.points()(r, 0), 17) + "," +
               format_double(y_down && v != 0.0 ? -v : v, 17) + "," + (landmarks.visible(j) ? "1" : "0") + "\n";
    }
    return out;
}

std::string report_csv(const AblationResult& result)
{
    result.validate();
    std::string out = "axis_value,metric,value,std\n";
    for (std::size_t g = 0; g < result.grid.size(); ++g)
    {
        for (const auto& s : result.series)
        {
            out += format_double(result.grid[g], 17) + "," + s.metric + "," + format_double(s.values[g], 17) + "," +
                   format_double(s.stds[g], 17) + "\n";
        }
    }
    return out;
}

std::string error_map_csv(const ErrorMap& map)
{
    std::string out = "vertex,error\n";
    for (std::size_t j = 0; j < map.per_vertex.size(); ++j)
    {
        out += std::to_string(j) + "," + format_double(map.per_vertex[j], 17) + "\n";
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    auto temp = path;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out)
        {
            throw IoError(io_context(path, "cannot open for writing"));
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
        {
            out.close();
            std::error_code ignored;
            std::filesystem::remove(temp, ignored);
            throw IoError(io_context(path, "write failed"));
        }
    }
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec)
    {
        std::error_code ignored;
        std::filesystem::remove(temp, ignored);
        throw IoError(io_context(path, "cannot replace (" + ec.message() + ")"));
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text)
{
    write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError(io_context(path, "cannot open for reading"));
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
    {
        throw IoError(io_context(path, "read failed"));
    }
    return bytes;
}

} // namespace csr3d
