#include "bus/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bus/image_io.hpp"

namespace bus {

namespace fs = std::filesystem;

namespace {

struct Color {
    double r, g, b;
};

constexpr std::array<Color, 4> kStuffPalette = {{
    {0.55, 0.70, 0.90},  // sky
    {0.42, 0.55, 0.28},  // ground
    {0.55, 0.52, 0.50},  // wall
    {0.25, 0.45, 0.65},  // water
}};

// Thing colors; the triangle sits between the disc and the square so the
// private class is confusable with known things under domain shift.
constexpr std::array<Color, 4> kThingPalette = {{
    {0.85, 0.25, 0.22},  // disc, red
    {0.82, 0.68, 0.20},  // square, yellow
    {0.82, 0.47, 0.20},  // triangle, orange
    {0.55, 0.30, 0.65},  // cross, purple
}};

Color base_color(int class_id, const SceneConfig& cfg) {
    if (class_id < cfg.num_stuff) return kStuffPalette[class_id % kStuffPalette.size()];
    return kThingPalette[(class_id - cfg.num_stuff) % kThingPalette.size()];
}

// Rotation about the achromatic axis (1,1,1)/sqrt(3).
Color hue_rotate(const Color& c, double degrees) {
    if (degrees == 0.0) return c;
    const double t = degrees * 3.14159265358979323846 / 180.0;
    const double ct = std::cos(t), st = std::sin(t);
    const double k = 1.0 / std::sqrt(3.0);
    const double one_ct = (1.0 - ct) / 3.0;
    const double a = ct + one_ct, b = one_ct - st * k, d = one_ct + st * k;
    return {a * c.r + b * c.g + d * c.b,
            d * c.r + a * c.g + b * c.b,
            b * c.r + d * c.g + a * c.b};
}

enum class Shape { kDisc, kSquare, kTriangle, kCross };

Shape shape_for_class(int class_id, const SceneConfig& cfg) {
    return static_cast<Shape>((class_id - cfg.num_stuff) % 4);
}

bool inside_shape(Shape shape, int dy, int dx, int r) {
    switch (shape) {
        case Shape::kDisc: return dy * dy + dx * dx <= r * r;
        case Shape::kSquare: return std::abs(dy) <= r && std::abs(dx) <= r;
        case Shape::kTriangle: return std::abs(dy) <= r && 2 * std::abs(dx) <= dy + r;
        case Shape::kCross: {
            const int t = std::max(2, r / 3 + 1);
            return (std::abs(dy) <= t && std::abs(dx) <= r) ||
                   (std::abs(dx) <= t && std::abs(dy) <= r);
        }
    }
    return false;
}

struct PlacedObject {
    int cy, cx, r;
};

bool boxes_overlap(const PlacedObject& a, const PlacedObject& b) {
    return std::abs(a.cy - b.cy) <= a.r + b.r + 1 && std::abs(a.cx - b.cx) <= a.r + b.r + 1;
}

}  // namespace

void SceneConfig::validate() const {
    if (width < 8 || height < 8) throw ValidationError("SceneConfig: image too small");
    if (num_stuff < 1 || num_things < 1)
        throw ValidationError("SceneConfig: need at least one stuff and one thing class");
    if (objects_min < 0 || objects_max < objects_min)
        throw ValidationError("SceneConfig: bad objects range");
    std::set<int> priv(private_classes.begin(), private_classes.end());
    if (priv.size() != private_classes.size())
        throw ValidationError("SceneConfig: duplicate private class");
    for (int id : private_classes) {
        if (id < 0 || id >= total_classes())
            throw ValidationError("SceneConfig: private class out of range");
        if (!allow_stuff_private && !is_thing(id))
            throw ValidationError("SceneConfig: private class must be a thing class");
    }
    if (static_cast<int>(priv.size()) >= total_classes())
        throw ValidationError("SceneConfig: private classes cover every class");
    for (const DomainParams* d : {&source, &target}) {
        if (d->object_min_radius < 3 || d->object_max_radius < d->object_min_radius)
            throw ValidationError("SceneConfig: bad object radius range");
        if (d->noise_sigma < 0.0) throw ValidationError("SceneConfig: negative noise sigma");
    }
}

ScenePair generate_scene(const DomainParams& domain, const SceneConfig& cfg, Rng& rng) {
    cfg.validate();
    const int h = cfg.height, w = cfg.width;
    const std::set<int> private_set(cfg.private_classes.begin(), cfg.private_classes.end());

    ScenePair scene;
    scene.image = ImageTensor::zeros(h, w);
    scene.label = LabelMap::filled(h, w, 0);

    // Stuff bands: random horizontal cuts, top to bottom.
    std::vector<int> cuts;
    for (int i = 1; i < cfg.num_stuff; ++i) {
        const int lo = h * i / (cfg.num_stuff + 1);
        const int hi = h * (i + 1) / (cfg.num_stuff + 1) + h / 4;
        cuts.push_back(static_cast<int>(rng.uniform_int(lo, std::min(hi, h - 1))));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(h);
    std::vector<double> band_jitter(cfg.num_stuff);
    for (int i = 0; i < cfg.num_stuff; ++i) band_jitter[i] = (rng.uniform() * 2 - 1) * 0.04;
    {
        int band = 0;
        for (int y = 0; y < h; ++y) {
            while (y >= cuts[band]) ++band;
            for (int x = 0; x < w; ++x) scene.label.at(y, x) = band;
        }
    }

    // Objects: uniform thing class, bounded placement retries, no overlap.
    const int count = static_cast<int>(rng.uniform_int(cfg.objects_min, cfg.objects_max));
    std::vector<PlacedObject> placed;
    std::vector<int> object_class;
    std::vector<Color> object_jitter;  // per-channel, so each object is a color blob
    for (int i = 0; i < count; ++i) {
        const int cls = cfg.num_stuff + static_cast<int>(rng.uniform_int(0, cfg.num_things - 1));
        const int r = static_cast<int>(
            rng.uniform_int(domain.object_min_radius, domain.object_max_radius));
        bool ok = false;
        PlacedObject obj{0, 0, r};
        for (int attempt = 0; attempt < 30 && !ok; ++attempt) {
            obj.cy = static_cast<int>(rng.uniform_int(r, h - 1 - r));
            obj.cx = static_cast<int>(rng.uniform_int(r, w - 1 - r));
            ok = true;
            for (const auto& other : placed)
                if (boxes_overlap(obj, other)) {
                    ok = false;
                    break;
                }
        }
        if (!ok) continue;  // fewer objects rather than a hard failure
        placed.push_back(obj);
        object_class.push_back(cls);
        if (private_set.count(cls)) {
            // Private classes are appearance-diverse: each object draws its
            // color from a wide box that overlaps the thing palette, the way
            // several removed classes collapse into one open-set unknown.
            const Color base = base_color(cls, cfg);
            object_jitter.push_back({0.40 + 0.50 * rng.uniform() - base.r,
                                     0.18 + 0.55 * rng.uniform() - base.g,
                                     0.12 + 0.50 * rng.uniform() - base.b});
        } else {
            object_jitter.push_back({(rng.uniform() * 2 - 1) * 0.08,
                                     (rng.uniform() * 2 - 1) * 0.08,
                                     (rng.uniform() * 2 - 1) * 0.08});
        }
        const Shape shape = shape_for_class(cls, cfg);
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                if (inside_shape(shape, dy, dx, r))
                    scene.label.at(obj.cy + dy, obj.cx + dx) = cls;
    }

    // Paint: base class color + per-region jitter, hue-rotated and shifted
    // into the domain, then per-pixel noise.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int cls = scene.label.at(y, x);
            Color jitter{0.0, 0.0, 0.0};
            if (cls < cfg.num_stuff) {
                jitter = {band_jitter[cls], band_jitter[cls], band_jitter[cls]};
            } else {
                // Pixel may belong to any object of this class; jitter by the
                // object actually covering it.
                for (std::size_t i = 0; i < placed.size(); ++i) {
                    const auto& obj = placed[i];
                    if (object_class[i] != cls) continue;
                    const int dy = y - obj.cy, dx = x - obj.cx;
                    if (std::abs(dy) <= obj.r && std::abs(dx) <= obj.r &&
                        inside_shape(shape_for_class(cls, cfg), dy, dx, obj.r))
                        jitter = object_jitter[i];
                }
            }
            Color c = base_color(cls, cfg);
            c = {c.r + jitter.r, c.g + jitter.g, c.b + jitter.b};
            c = hue_rotate(c, domain.palette_rotation);
            const double n0 = rng.normal() * domain.noise_sigma;
            const double n1 = rng.normal() * domain.noise_sigma;
            const double n2 = rng.normal() * domain.noise_sigma;
            scene.image.at(y, x, 0) = std::clamp(c.r + domain.brightness + n0, 0.0, 1.0);
            scene.image.at(y, x, 1) = std::clamp(c.g + domain.brightness + n1, 0.0, 1.0);
            scene.image.at(y, x, 2) = std::clamp(c.b + domain.brightness + n2, 0.0, 1.0);
        }
    }
    return scene;
}

Benchmark apply_scenario(Benchmark raw, const std::vector<int>& private_ids,
                         const SceneConfig& cfg) {
    const int total = cfg.total_classes();
    std::set<int> priv(private_ids.begin(), private_ids.end());
    for (int id : priv)
        if (id < 0 || id >= total) throw ValidationError("apply_scenario: bad private id");
    if (static_cast<int>(priv.size()) >= total)
        throw ValidationError("apply_scenario: private classes cover every class");

    // Dense re-index of the surviving known classes.
    std::vector<int> reindex(total, -1);
    int next = 0;
    for (int id = 0; id < total; ++id)
        if (!priv.count(id)) reindex[id] = next++;
    const ClassSpace cs(next);

    for (auto& label : raw.source_labels)
        for (int& v : label.data) v = priv.count(v) ? cs.ignore_id : reindex[v];
    for (auto& label : raw.target_eval_labels)
        for (int& v : label.data) v = priv.count(v) ? cs.unknown_id : reindex[v];

    raw.class_space = cs;
    raw.private_classes.assign(priv.begin(), priv.end());
    raw.known_thing_classes.clear();
    for (int id = cfg.num_stuff; id < total; ++id)
        if (!priv.count(id)) raw.known_thing_classes.push_back(reindex[id]);
    return raw;
}

Benchmark build_benchmark(const SceneConfig& cfg, int source_count, int target_count,
                          std::uint64_t seed) {
    cfg.validate();
    if (source_count < 1 || target_count < 1)
        throw ValidationError("build_benchmark: counts must be >= 1");

    Benchmark raw;
    raw.width = cfg.width;
    raw.height = cfg.height;
    raw.seed = seed;
    Rng root(seed);
    const Rng source_stream = root.fork(1);
    const Rng target_stream = root.fork(2);
    for (int i = 0; i < source_count; ++i) {
        Rng rng = source_stream.fork(static_cast<std::uint64_t>(i));
        ScenePair scene = generate_scene(cfg.source, cfg, rng);
        raw.source_images.push_back(std::move(scene.image));
        raw.source_labels.push_back(std::move(scene.label));
    }
    for (int i = 0; i < target_count; ++i) {
        Rng rng = target_stream.fork(static_cast<std::uint64_t>(i));
        ScenePair scene = generate_scene(cfg.target, cfg, rng);
        raw.target_images.push_back(std::move(scene.image));
        raw.target_eval_labels.push_back(std::move(scene.label));
    }
    return apply_scenario(std::move(raw), cfg.private_classes, cfg);
}

namespace {

std::string index_name(const char* prefix, int i, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%05d.%s", prefix, i, ext);
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::ostringstream out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ",";
        out << v[i];
    }
    return out.str();
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

}  // namespace

void write_benchmark(const fs::path& dir, const Benchmark& bench) {
    std::error_code ec;
    fs::create_directories(dir / "source", ec);
    fs::create_directories(dir / "target", ec);
    fs::create_directories(dir / "target_eval", ec);
    if (ec) throw IoError("cannot create archive directories under " + dir.string());

    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw IoError("cannot write manifest in " + dir.string());
    manifest << "format = busseg-benchmark\n"
             << "version = 1\n"
             << "width = " << bench.width << "\n"
             << "height = " << bench.height << "\n"
             << "num_known = " << bench.class_space.num_known << "\n"
             << "unknown_id = " << bench.class_space.unknown_id << "\n"
             << "ignore_id = " << bench.class_space.ignore_id << "\n"
             << "num_source = " << bench.source_images.size() << "\n"
             << "num_target = " << bench.target_images.size() << "\n"
             << "seed = " << bench.seed << "\n"
             << "private_classes = " << join_ints(bench.private_classes) << "\n"
             << "known_thing_classes = " << join_ints(bench.known_thing_classes) << "\n";
    manifest.close();

    for (std::size_t i = 0; i < bench.source_images.size(); ++i) {
        write_ppm(dir / "source" / index_name("img", static_cast<int>(i), "ppm"),
                  bench.source_images[i]);
        write_pgm(dir / "source" / index_name("lbl", static_cast<int>(i), "pgm"),
                  bench.source_labels[i]);
    }
    for (std::size_t i = 0; i < bench.target_images.size(); ++i) {
        write_ppm(dir / "target" / index_name("img", static_cast<int>(i), "ppm"),
                  bench.target_images[i]);
        write_pgm(dir / "target_eval" / index_name("lbl", static_cast<int>(i), "pgm"),
                  bench.target_eval_labels[i]);
    }
}

Benchmark read_benchmark(const fs::path& dir) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw IoError("missing manifest in " + dir.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(manifest, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    if (kv["format"] != "busseg-benchmark") throw IoError(dir.string() + ": not a benchmark archive");

    Benchmark bench;
    try {
        bench.width = std::stoi(kv.at("width"));
        bench.height = std::stoi(kv.at("height"));
        bench.class_space = ClassSpace(std::stoi(kv.at("num_known")));
        bench.seed = std::stoull(kv.at("seed"));
        bench.private_classes = split_ints(kv.at("private_classes"));
        bench.known_thing_classes = split_ints(kv.at("known_thing_classes"));
        const int ns = std::stoi(kv.at("num_source"));
        const int nt = std::stoi(kv.at("num_target"));
        for (int i = 0; i < ns; ++i) {
            bench.source_images.push_back(read_ppm(dir / "source" / index_name("img", i, "ppm")));
            bench.source_labels.push_back(read_pgm(dir / "source" / index_name("lbl", i, "pgm")));
        }
        for (int i = 0; i < nt; ++i) {
            bench.target_images.push_back(read_ppm(dir / "target" / index_name("img", i, "ppm")));
            bench.target_eval_labels.push_back(
                read_pgm(dir / "target_eval" / index_name("lbl", i, "pgm")));
        }
    } catch (const std::out_of_range&) {
        throw IoError(dir.string() + ": manifest missing required keys");
    } catch (const std::invalid_argument&) {
        throw IoError(dir.string() + ": malformed manifest value");
    }
    return bench;
}

std::uint64_t archive_checksum(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
        return a.lexically_relative(dir) < b.lexically_relative(dir);
    });

    std::uint64_t hash = 0xcbf29ce484222325ULL;
    auto mix = [&hash](const char* data, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= static_cast<unsigned char>(data[i]);
            hash *= 0x100000001b3ULL;
        }
    };
    for (const auto& file : files) {
        const std::string rel = file.lexically_relative(dir).generic_string();
        mix(rel.data(), rel.size());
        std::ifstream in(file, std::ios::binary);
        if (!in) throw IoError("cannot read " + file.string());
        char buf[4096];
        while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
            mix(buf, static_cast<std::size_t>(in.gcount()));
    }
    return hash;
}

}  // namespace bus
