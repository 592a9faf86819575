#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "bus/dataset.hpp"
#include "bus/image_io.hpp"

using namespace bus;
namespace fs = std::filesystem;

namespace {

SceneConfig tiny_config() {
    SceneConfig cfg;
    cfg.width = 32;
    cfg.height = 32;
    cfg.objects_min = 2;
    cfg.objects_max = 3;
    cfg.source.object_min_radius = 3;
    cfg.source.object_max_radius = 5;
    cfg.target.object_min_radius = 3;
    cfg.target.object_max_radius = 5;
    return cfg;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("zero objects give a pure stuff background") {
    SceneConfig cfg = tiny_config();
    cfg.objects_min = cfg.objects_max = 0;
    Rng rng(4);
    const ScenePair scene = generate_scene(cfg.source, cfg, rng);
    for (int v : scene.label.data) CHECK(v < cfg.num_stuff);
}

TEST_CASE("scene generation is deterministic per seed") {
    const SceneConfig cfg = tiny_config();
    Rng a(123), b(123), c(124);
    const ScenePair sa = generate_scene(cfg.target, cfg, a);
    const ScenePair sb = generate_scene(cfg.target, cfg, b);
    const ScenePair sc = generate_scene(cfg.target, cfg, c);
    CHECK(sa.image.data == sb.image.data);
    CHECK(sa.label.data == sb.label.data);
    CHECK(sa.label.data != sc.label.data);
}

TEST_CASE("noise-free colors map one-to-one onto labels") {
    SceneConfig cfg = tiny_config();
    cfg.source.noise_sigma = 0.0;
    Rng rng(9);
    const ScenePair scene = generate_scene(cfg.source, cfg, rng);
    // Each painted color (object or band) must come from a single class.
    std::map<std::tuple<double, double, double>, std::set<int>> by_color;
    for (int y = 0; y < scene.label.height; ++y)
        for (int x = 0; x < scene.label.width; ++x)
            by_color[{scene.image.at(y, x, 0), scene.image.at(y, x, 1),
                      scene.image.at(y, x, 2)}]
                .insert(scene.label.at(y, x));
    for (const auto& [color, classes] : by_color) CHECK(classes.size() == 1);
}

TEST_CASE("labels stay within the configured class range") {
    const SceneConfig cfg = tiny_config();
    Rng rng(77);
    for (int i = 0; i < 10; ++i) {
        const ScenePair scene = generate_scene(cfg.target, cfg, rng);
        for (int v : scene.label.data) {
            CHECK(v >= 0);
            CHECK(v < cfg.total_classes());
        }
    }
}

TEST_CASE("apply_scenario relabels and re-indexes") {
    SceneConfig cfg = tiny_config();
    Benchmark raw;
    raw.width = cfg.width;
    raw.height = cfg.height;
    Rng rng(55);
    for (int i = 0; i < 6; ++i) {
        ScenePair s = generate_scene(cfg.source, cfg, rng);
        raw.source_images.push_back(s.image);
        raw.source_labels.push_back(s.label);
        ScenePair t = generate_scene(cfg.target, cfg, rng);
        raw.target_images.push_back(t.image);
        raw.target_eval_labels.push_back(t.label);
    }

    // Count private pixels before the transform.
    const std::vector<int> private_ids = {3, 4};  // square and triangle things
    std::int64_t private_eval_pixels = 0;
    for (const auto& label : raw.target_eval_labels)
        for (int v : label.data) private_eval_pixels += (v == 3 || v == 4);

    const Benchmark bench = apply_scenario(raw, private_ids, cfg);
    CHECK(bench.class_space.num_known == 3);
    CHECK(bench.class_space.unknown_id == 3);
    CHECK(bench.known_thing_classes == std::vector<int>{2});  // disc survives as id 2

    for (const auto& label : bench.source_labels)
        for (int v : label.data) {
            CHECK(v != bench.class_space.unknown_id);
            CHECK((v == bench.class_space.ignore_id || v < bench.class_space.num_known));
        }
    std::int64_t unknown_pixels = 0;
    for (const auto& label : bench.target_eval_labels)
        for (int v : label.data) {
            CHECK(v != bench.class_space.ignore_id);
            unknown_pixels += v == bench.class_space.unknown_id;
        }
    CHECK(unknown_pixels == private_eval_pixels);  // both privates collapse to one unknown

    CHECK_THROWS_AS(apply_scenario(bench, {0, 1, 2, 3, 4}, cfg), ValidationError);
}

TEST_CASE("empty private set keeps labels unchanged") {
    SceneConfig cfg = tiny_config();
    Benchmark raw;
    Rng rng(3);
    ScenePair s = generate_scene(cfg.source, cfg, rng);
    raw.source_images.push_back(s.image);
    raw.source_labels.push_back(s.label);
    raw.target_images.push_back(s.image);
    raw.target_eval_labels.push_back(s.label);
    const Benchmark bench = apply_scenario(raw, {}, cfg);
    CHECK(bench.class_space.num_known == cfg.total_classes());
    CHECK(bench.source_labels[0].data == s.label.data);
    CHECK(bench.target_eval_labels[0].data == s.label.data);
}

TEST_CASE("build_benchmark honors counts and hides target labels from the train split") {
    SceneConfig cfg = tiny_config();
    const Benchmark bench = build_benchmark(cfg, 1, 1, 99);
    CHECK(bench.source_images.size() == 1);
    CHECK(bench.target_images.size() == 1);
    CHECK(bench.target_eval_labels.size() == 1);
    CHECK_THROWS_AS(build_benchmark(cfg, 0, 1, 99), ValidationError);
}

TEST_CASE("benchmark archives are byte-identical for a fixed seed") {
    SceneConfig cfg = tiny_config();
    TempDir d1("busseg_arch1"), d2("busseg_arch2");
    write_benchmark(d1.path, build_benchmark(cfg, 3, 3, 7));
    write_benchmark(d2.path, build_benchmark(cfg, 3, 3, 7));
    CHECK(archive_checksum(d1.path) == archive_checksum(d2.path));

    TempDir d3("busseg_arch3");
    write_benchmark(d3.path, build_benchmark(cfg, 3, 3, 8));
    CHECK(archive_checksum(d1.path) != archive_checksum(d3.path));
}

TEST_CASE("archive round trip preserves the benchmark") {
    SceneConfig cfg = tiny_config();
    const Benchmark bench = build_benchmark(cfg, 2, 2, 42);
    TempDir dir("busseg_roundtrip");
    write_benchmark(dir.path, bench);
    const Benchmark loaded = read_benchmark(dir.path);

    CHECK(loaded.class_space.num_known == bench.class_space.num_known);
    CHECK(loaded.private_classes == bench.private_classes);
    CHECK(loaded.known_thing_classes == bench.known_thing_classes);
    CHECK(loaded.source_labels[1].data == bench.source_labels[1].data);
    CHECK(loaded.target_eval_labels[0].data == bench.target_eval_labels[0].data);

    // Images quantize to 8 bits once; a second write is bit-exact.
    TempDir dir2("busseg_roundtrip2");
    write_benchmark(dir2.path, loaded);
    CHECK(archive_checksum(dir.path) == archive_checksum(dir2.path));
}

TEST_CASE("ppm/pgm round trips") {
    TempDir dir("busseg_pnm");
    LabelMap labels = LabelMap::filled(3, 5, 2);
    labels.at(0, 0) = kIgnoreId;
    labels.at(2, 4) = 7;
    write_pgm(dir.path / "l.pgm", labels);
    CHECK(read_pgm(dir.path / "l.pgm").data == labels.data);

    ImageTensor img = ImageTensor::zeros(4, 3);
    Rng rng(1);
    for (double& v : img.data) v = rng.uniform();
    write_ppm(dir.path / "i.ppm", img);
    const ImageTensor back = read_ppm(dir.path / "i.ppm");
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-12);

    CHECK_THROWS_AS(read_ppm(dir.path / "missing.ppm"), IoError);
    write_ppm(dir.path / "bad.ppm", img);
    CHECK_THROWS_AS(read_pgm(dir.path / "bad.ppm"), IoError);  // magic mismatch
}

TEST_CASE("default-scale target scenes almost always contain a private object") {
    SceneConfig cfg;  // full 64x64 defaults
    Rng rng(2026);
    int with_private = 0;
    const int trials = 500;
    for (int i = 0; i < trials; ++i) {
        Rng scene_rng = rng.fork(static_cast<std::uint64_t>(i));
        const ScenePair scene = generate_scene(cfg.target, cfg, scene_rng);
        bool has = false;
        for (int v : scene.label.data) has = has || v == 4;
        with_private += has;
    }
    CHECK(with_private >= static_cast<int>(0.8 * trials));
}

TEST_CASE("scene config validation") {
    SceneConfig cfg = tiny_config();
    cfg.private_classes = {0};  // stuff class
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.allow_stuff_private = true;
    CHECK_NOTHROW(cfg.validate());
    cfg.private_classes = {0, 1, 2, 3, 4};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.private_classes = {9};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
