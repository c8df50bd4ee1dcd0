/*
 * csr3d - cascaded shape-space regression for 3D face reconstruction.
 *
 * File: tests/test_cli.cpp
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

#include "../tools/cli.hpp"

#include "csr3d/io.hpp"

#include <filesystem>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using csr3d::cli::run;

namespace {

struct Result
{
    int code = -1;
    std::string out;
    std::string err;
};

Result call(std::initializer_list<std::string> args)
{
    std::vector<std::string> storage{"csr3d"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : storage)
    {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    Result r;
    r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

struct TempDir
{
    fs::path path;

    TempDir()
    {
        std::random_device rd;
        path = fs::temp_directory_path() / ("csr3d_cli_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::size_t line_count(const std::string& text)
{
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_CASE("desk-scale pipeline")
{
    TempDir tmp;
    const Result synth = call({"synth", "--out", tmp / "data", "--emit-landmarks"});
    REQUIRE_MESSAGE(synth.code == 0, synth.err);
    CHECK(synth.out.find("vertices,1500") != std::string::npos);
    CHECK(synth.out.find("train_samples,2400") != std::string::npos);
    CHECK(fs::exists(tmp.path / "data" / "landmarks" / "test_00000.csv"));

    const Result train = call({"train", "--data", tmp / "data/train", "--out", tmp / "model.csr3d"});
    REQUIRE_MESSAGE(train.code == 0, train.err);
    CHECK(train.out.rfind("stage,objective,ridge,fallback\n", 0) == 0);
    CHECK(line_count(train.out) == 7);

    const Result predict = call({"predict", "--model", tmp / "model.csr3d", "--landmarks",
                                 tmp / "data/landmarks/test_00003.csv", "--emit-obj", tmp / "face.obj"});
    REQUIRE_MESSAGE(predict.code == 0, predict.err);
    CHECK(predict.out.rfind("x,y,z\n", 0) == 0);
    CHECK(line_count(predict.out) == 1501);
    CHECK(fs::exists(tmp.path / "face.obj"));

    const Result again = call({"predict", "--model", tmp / "model.csr3d", "--landmarks",
                               tmp / "data/landmarks/test_00003.csv"});
    CHECK(again.out == predict.out);

    const Result estimated = call({"predict", "--model", tmp / "model.csr3d", "--landmarks",
                                   tmp / "data/landmarks/test_00003.csv", "--estimate-visibility"});
    CHECK(estimated.code == 0);

    const Result eval = call({"eval", "--model", tmp / "model.csr3d", "--data", tmp / "data/test", "--error-map",
                              tmp / "errors.csv"});
    REQUIRE_MESSAGE(eval.code == 0, eval.err);
    CHECK(eval.out.rfind("axis_value,metric,value,std\n", 0) == 0);
    CHECK(eval.out.find(",mae,") != std::string::npos);
    CHECK(eval.out.find(",npde,") != std::string::npos);
    CHECK(fs::exists(tmp.path / "errors.csv"));

    const Result exported = call({"export-obj", "--data", tmp / "data/test", "--index", "2", "--out", tmp / "gt.obj"});
    CHECK(exported.code == 0);
    const Result mean = call({"export-obj", "--model", tmp / "model.csr3d", "--out", tmp / "mean.obj"});
    CHECK(mean.code == 0);
}

TEST_CASE("identical invocations give identical outputs")
{
    TempDir tmp;
    for (const char* name : {"a", "b"})
    {
        const Result r = call({"--seed", "7", "synth", "--vertices", "300", "--subjects", "6", "--out", tmp / name});
        REQUIRE_MESSAGE(r.code == 0, r.err);
    }
    for (const char* part : {"train/records.bin", "train/manifest.json", "test/records.bin"})
    {
        CHECK(csr3d::read_file(tmp.path / "a" / part) == csr3d::read_file(tmp.path / "b" / part));
    }
    const Result ta = call({"train", "--data", tmp / "a/train", "--stages", "2", "--out", tmp / "a.csr3d"});
    const Result tb = call({"train", "--data", tmp / "b/train", "--stages", "2", "--out", tmp / "b.csr3d"});
    REQUIRE(ta.code == 0);
    CHECK(ta.out == tb.out);
    CHECK(csr3d::read_file(tmp.path / "a.csr3d") == csr3d::read_file(tmp.path / "b.csr3d"));
}

TEST_CASE("experiment subcommands on a small dataset")
{
    TempDir tmp;
    REQUIRE(call({"synth", "--vertices", "400", "--subjects", "12", "--out", tmp / "d"}).code == 0);
    const std::string train = tmp / "d/train";
    const std::string test = tmp / "d/test";

    const Result conv = call({"convergence", "--data", train, "--stages", "4"});
    REQUIRE_MESSAGE(conv.code == 0, conv.err);
    CHECK(conv.out.find("0,objective,1,0\n") != std::string::npos);

    const Result lm = call({"--threads", "2", "ablate-landmarks", "--train", train, "--test", test, "--sizes", "17,68",
                            "--stages", "2"});
    REQUIRE_MESSAGE(lm.code == 0, lm.err);
    CHECK(lm.out.find("17,mae,") != std::string::npos);
    CHECK(lm.out.find("68,mae_nose,") != std::string::npos);

    const Result cov = call({"ablate-coverage", "--train", train, "--test", test, "--grid-points", "3", "--stages",
                             "2"});
    REQUIRE_MESSAGE(cov.code == 0, cov.err);
    CHECK(cov.out.find("mae_innermost") != std::string::npos);

    const Result den = call({"ablate-density", "--train", train, "--test", test, "--factors", "3,1", "--stages",
                             "2"});
    REQUIRE_MESSAGE(den.code == 0, den.err);
    CHECK(den.out.find("mae_common") != std::string::npos);

    const Result cmp = call({"compare-noise", "--train", train, "--test", test, "--stages", "2", "--noise-replicas",
                             "2", "--out", tmp / "noise.csv"});
    REQUIRE_MESSAGE(cmp.code == 0, cmp.err);
    CHECK(fs::exists(tmp.path / "noise.csv"));
}

TEST_CASE("bench reports latency")
{
    const Result r = call({"bench", "--vertices", "600", "--landmarks", "20", "--stages", "2", "--images", "3",
                           "--batch", "4", "--isa", "scalar"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.rfind("mode,isa,n,l,K,images,ms_per_image,images_per_second\n", 0) == 0);
    CHECK(r.out.find("single,scalar,600,20,2,3,") != std::string::npos);
    CHECK(r.out.find("batch,scalar,600,20,2,4,") != std::string::npos);
}

TEST_CASE("exit codes")
{
    const Result unknown = call({"train", "--bogus"});
    CHECK(unknown.code == 1);
    CHECK(unknown.err.find("Usage") != std::string::npos);

    const Result none = call({});
    CHECK(none.code == 1);

    TempDir tmp;
    const Result missing = call({"predict", "--model", tmp / "absent.csr3d", "--landmarks", tmp / "absent.csv"});
    CHECK(missing.code == 3);
    CHECK(missing.err.find("absent.csr3d") != std::string::npos);

    REQUIRE(call({"synth", "--vertices", "200", "--subjects", "2", "--out", tmp / "d"}).code == 0);
    const Result singular = call({"train", "--data", tmp / "d/train", "--ridge", "0", "--out", tmp / "m.csr3d"});
    CHECK(singular.code == 2);
    CHECK_FALSE(fs::exists(tmp.path / "m.csr3d"));

    const Result negative = call({"train", "--data", tmp / "d/train", "--noise-std", "-1"});
    CHECK(negative.code == 1);

    fs::create_directories(tmp.path / "lm");
    csr3d::write_file_atomic(tmp.path / "lm/bad.csv", std::string_view("0,1,1,1\n"));
    REQUIRE(call({"train", "--data", tmp / "d/train", "--stages", "1", "--out", tmp / "ok.csr3d"}).code == 0);
    const Result parse = call({"predict", "--model", tmp / "ok.csr3d", "--landmarks", tmp / "lm/bad.csv"});
    CHECK(parse.code == 1);
}
