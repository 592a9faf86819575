#include "bus/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace bus {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for " + key + ": '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for " + key + ": '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: bad boolean value for " + key + ": '" + value + "'");
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse) {
    std::vector<T> out;
    std::istringstream in(value);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(parse(key, tok));
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
    std::ostringstream out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ",";
        out << v[i];
    }
    return out.str();
}

}  // namespace

RunConfig RunConfig::defaults() { return RunConfig{}; }

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "out_dir") out_dir = value;
    else if (key == "archive_dir") archive_dir = value;
    else if (key == "seeds") seeds = parse_list<std::uint64_t>(key, value, parse_u64);
    else if (key == "scene.seed") scene_seed = parse_u64(key, value);
    else if (key == "scene.source_count") source_count = parse_int(key, value);
    else if (key == "scene.target_count") target_count = parse_int(key, value);
    else if (key == "scene.width") scene.width = parse_int(key, value);
    else if (key == "scene.height") scene.height = parse_int(key, value);
    else if (key == "scene.num_stuff") scene.num_stuff = parse_int(key, value);
    else if (key == "scene.num_things") scene.num_things = parse_int(key, value);
    else if (key == "scene.objects_min") scene.objects_min = parse_int(key, value);
    else if (key == "scene.objects_max") scene.objects_max = parse_int(key, value);
    else if (key == "scene.private_classes")
        scene.private_classes = parse_list<int>(key, value, parse_int);
    else if (key == "scene.allow_stuff_private")
        scene.allow_stuff_private = parse_bool(key, value);
    else if (key == "scene.source.palette_rotation")
        scene.source.palette_rotation = parse_double(key, value);
    else if (key == "scene.source.brightness") scene.source.brightness = parse_double(key, value);
    else if (key == "scene.source.noise_sigma")
        scene.source.noise_sigma = parse_double(key, value);
    else if (key == "scene.source.object_min_radius")
        scene.source.object_min_radius = parse_int(key, value);
    else if (key == "scene.source.object_max_radius")
        scene.source.object_max_radius = parse_int(key, value);
    else if (key == "scene.target.palette_rotation")
        scene.target.palette_rotation = parse_double(key, value);
    else if (key == "scene.target.brightness") scene.target.brightness = parse_double(key, value);
    else if (key == "scene.target.noise_sigma")
        scene.target.noise_sigma = parse_double(key, value);
    else if (key == "scene.target.object_min_radius")
        scene.target.object_min_radius = parse_int(key, value);
    else if (key == "scene.target.object_max_radius")
        scene.target.object_max_radius = parse_int(key, value);
    else if (key == "trainer.mode") trainer.mode = parse_train_mode(value);
    else if (key == "trainer.tau_p") trainer.tau_p = parse_double(key, value);
    else if (key == "trainer.tau_t") trainer.tau_t = parse_double(key, value);
    else if (key == "trainer.alpha") trainer.alpha = parse_double(key, value);
    else if (key == "trainer.tau_inf") trainer.tau_inf = parse_double(key, value);
    else if (key == "trainer.lr") trainer.lr = parse_double(key, value);
    else if (key == "trainer.momentum") trainer.momentum = parse_double(key, value);
    else if (key == "trainer.steps") trainer.steps = parse_int(key, value);
    else if (key == "trainer.batch_size") trainer.batch_size = parse_int(key, value);
    else if (key == "trainer.hidden") trainer.hidden = parse_int(key, value);
    else if (key == "trainer.seed") trainer.seed = parse_u64(key, value);
    else if (key == "decon.temperature") trainer.decon.temperature = parse_double(key, value);
    else if (key == "decon.weight") trainer.decon.weight = parse_double(key, value);
    else if (key == "morph.kernel_size") trainer.decon.morph.kernel_size = parse_int(key, value);
    else if (key == "morph.iterations") trainer.decon.morph.iterations = parse_int(key, value);
    else if (key == "morph.crop_size") trainer.decon.morph.crop_size = parse_int(key, value);
    else if (key == "morph.max_crop_retries")
        trainer.decon.morph.max_crop_retries = parse_int(key, value);
    else if (key == "mix.resize_scale") trainer.mix.resize_scale = parse_double(key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig RunConfig::load(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
    RunConfig cfg;
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override must be key=value: '" + ov + "'");
        cfg.set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    // Bad values in a config file are usage errors, whatever layer they
    // surface from.
    try {
        scene.validate();
        trainer.validate();
        SegNetConfig{trainer.hidden, ClassSpace(1).num_heads()}.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    if (source_count < 1 || target_count < 1)
        throw ConfigError("config: counts must be >= 1");
    if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");
    if (trainer.decon.morph.crop_size > scene.width ||
        trainer.decon.morph.crop_size > scene.height)
        throw ConfigError("config: morph.crop_size exceeds scene size");
}

std::string RunConfig::emit() const {
    std::ostringstream out;
    const std::string resolved_archive =
        archive_dir.empty() ? out_dir + "/benchmark" : archive_dir;
    out << "out_dir = " << out_dir << "\n";
    out << "archive_dir = " << resolved_archive << "\n";
    out << "seeds = " << fmt_list(seeds) << "\n";
    out << "scene.seed = " << scene_seed << "\n";
    out << "scene.source_count = " << source_count << "\n";
    out << "scene.target_count = " << target_count << "\n";
    out << "scene.width = " << scene.width << "\n";
    out << "scene.height = " << scene.height << "\n";
    out << "scene.num_stuff = " << scene.num_stuff << "\n";
    out << "scene.num_things = " << scene.num_things << "\n";
    out << "scene.objects_min = " << scene.objects_min << "\n";
    out << "scene.objects_max = " << scene.objects_max << "\n";
    out << "scene.private_classes = " << fmt_list(scene.private_classes) << "\n";
    out << "scene.allow_stuff_private = " << (scene.allow_stuff_private ? "true" : "false")
        << "\n";
    out << "scene.source.palette_rotation = " << fmt_double(scene.source.palette_rotation)
        << "\n";
    out << "scene.source.brightness = " << fmt_double(scene.source.brightness) << "\n";
    out << "scene.source.noise_sigma = " << fmt_double(scene.source.noise_sigma) << "\n";
    out << "scene.source.object_min_radius = " << scene.source.object_min_radius << "\n";
    out << "scene.source.object_max_radius = " << scene.source.object_max_radius << "\n";
    out << "scene.target.palette_rotation = " << fmt_double(scene.target.palette_rotation)
        << "\n";
    out << "scene.target.brightness = " << fmt_double(scene.target.brightness) << "\n";
    out << "scene.target.noise_sigma = " << fmt_double(scene.target.noise_sigma) << "\n";
    out << "scene.target.object_min_radius = " << scene.target.object_min_radius << "\n";
    out << "scene.target.object_max_radius = " << scene.target.object_max_radius << "\n";
    out << "trainer.mode = " << to_string(trainer.mode) << "\n";
    out << "trainer.tau_p = " << fmt_double(trainer.tau_p) << "\n";
    out << "trainer.tau_t = " << fmt_double(trainer.tau_t) << "\n";
    out << "trainer.alpha = " << fmt_double(trainer.alpha) << "\n";
    out << "trainer.tau_inf = " << fmt_double(trainer.tau_inf) << "\n";
    out << "trainer.lr = " << fmt_double(trainer.lr) << "\n";
    out << "trainer.momentum = " << fmt_double(trainer.momentum) << "\n";
    out << "trainer.steps = " << trainer.steps << "\n";
    out << "trainer.batch_size = " << trainer.batch_size << "\n";
    out << "trainer.hidden = " << trainer.hidden << "\n";
    out << "trainer.seed = " << trainer.seed << "\n";
    out << "decon.temperature = " << fmt_double(trainer.decon.temperature) << "\n";
    out << "decon.weight = " << fmt_double(trainer.decon.weight) << "\n";
    out << "morph.kernel_size = " << trainer.decon.morph.kernel_size << "\n";
    out << "morph.iterations = " << trainer.decon.morph.iterations << "\n";
    out << "morph.crop_size = " << trainer.decon.morph.crop_size << "\n";
    out << "morph.max_crop_retries = " << trainer.decon.morph.max_crop_retries << "\n";
    out << "mix.resize_scale = " << fmt_double(trainer.mix.resize_scale) << "\n";
    return out.str();
}

}  // namespace bus
