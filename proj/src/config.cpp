#include "agbmap/config.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "agbmap/error.hpp"
#include "agbmap/parallel.hpp"

namespace agbmap {

std::string_view version() noexcept { return AGBMAP_VERSION; }

RunConfig::RunConfig() {
    workers = default_workers();
    scene.size = 512;
    scene.seed = 1;
    scene.s2_noise = 0.06;
    scene.s1_noise = 3.0;
    validation_scene = scene;
    validation_scene.seed = scene.seed + 1;
    train.depth = 3;
    train.base_width = 8;
    train.tile_size = 64;
    train.crop_size = 64;
    train.batch_size = 8;
    train.learning_rate = 0.005;
    train.max_epochs = 100;
    train.patience = 15;
}

DateWindow RunConfig::resolved_window() const {
    return window.empty() ? summer_window(scene.year) : DateWindow::parse(window);
}

SplitUnit RunConfig::resolved_split_unit() const {
    if (split_unit == "pixel") return SplitUnit::Pixel;
    if (split_unit == "tile") return SplitUnit::Tile;
    return model == ModelKind::UNet ? SplitUnit::Tile : SplitUnit::Pixel;
}

SplitSpec RunConfig::split_spec() const {
    SplitSpec s;
    s.train_fraction = train_fraction;
    s.unit = resolved_split_unit();
    s.seed = split_seed;
    s.tile_size = train.tile_size;
    return s;
}

ModelSpec RunConfig::model_spec() const {
    ModelSpec m;
    m.kind = model;
    m.hyperparams = hyperparams;
    m.train = train;
    return m;
}

AblationConfig RunConfig::ablation() const {
    AblationConfig a;
    a.site = scene;
    a.validation_site = validation_scene;
    a.models = ablate_models;
    a.subsets = ablate_subsets;
    a.n_runs = train.n_runs;
    a.seed = seed;
    a.split_seed = split_seed;
    a.train_fraction = train_fraction;
    a.unet = train;
    if (!hyperparams.empty()) a.hyperparams[model] = hyperparams;
    a.workers = workers;
    return a;
}

namespace {

void collect(std::vector<std::string>& problems, const std::string& prefix, const auto& fn) {
    try {
        fn();
    } catch (const Error& e) {
        // Nested validators report "CODE: header:\n  - item" lists; keep the items.
        std::istringstream lines(e.what());
        std::string line;
        bool any = false;
        std::getline(lines, line);
        while (std::getline(lines, line)) {
            const auto start = line.find_first_not_of(" -");
            if (start == std::string::npos) continue;
            problems.push_back(prefix + line.substr(start));
            any = true;
        }
        if (!any) {
            std::string what = e.what();
            const auto colon = what.find(": ");
            problems.push_back(prefix + (colon == std::string::npos ? what : what.substr(colon + 2)));
        }
    }
}

}  // namespace

void RunConfig::validate() const {
    std::vector<std::string> problems;
    if (workers < 1) problems.push_back("workers must be >= 1");
    collect(problems, "scene: ", [&] { scene.validate(); });
    collect(problems, "validation_scene: ", [&] { validation_scene.validate(); });
    collect(problems, "train: ", [&] { train.validate(); });
    if (train.n_runs < 1) problems.push_back("train.n_runs must be >= 1");
    if (!window.empty()) collect(problems, "compositing.window: ", [&] { DateWindow::parse(window); });
    if (composite_method != "median" && composite_method != "mean") {
        problems.push_back("compositing.method must be \"median\" or \"mean\"");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) problems.push_back("data.train_fraction must lie in (0, 1)");
    if (!split_unit.empty() && split_unit != "pixel" && split_unit != "tile") {
        problems.push_back("data.split_unit must be \"pixel\" or \"tile\"");
    }
    if (search_samples < 1) problems.push_back("search.n_samples must be >= 1");
    if (folds < 2) problems.push_back("search.folds must be >= 2");
    if (ablate_models.empty()) problems.push_back("ablate.models must not be empty");
    if (ablate_subsets.empty()) problems.push_back("ablate.subsets must not be empty");
    if (top_n < 1) problems.push_back("zones.top_n must be >= 1");
    if (!(cell_area_ha > 0.0)) problems.push_back("wildfire.cell_area_ha must be > 0");
    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw Error(ErrorCode::InvalidArgument, msg);
    }
}

namespace {

// Reads one TOML table into typed fields, remembering which keys were used
// so leftovers can be reported as unknown.
class Section {
public:
    Section(const toml::table* table, std::string name, std::vector<std::string>& problems)
        : table_(table), name_(std::move(name)), problems_(problems) {}

    template <class T>
    void get(std::string_view key, T& out) {
        used_.insert(std::string(key));
        if (!table_) return;
        const toml::node* node = table_->get(key);
        if (!node) return;
        if (!read(*node, out)) problems_.push_back(qualified(key) + " has the wrong type");
    }

    template <class T, class Parse>
    void get_parsed(std::string_view key, T& out, Parse parse) {
        std::string text;
        get(key, text);
        if (text.empty()) return;
        try {
            out = parse(text);
        } catch (const Error& e) {
            problems_.push_back(qualified(key) + ": " + e.what());
        }
    }

    template <class T, class Parse>
    void get_list(std::string_view key, std::vector<T>& out, Parse parse) {
        used_.insert(std::string(key));
        if (!table_) return;
        const toml::node* node = table_->get(key);
        if (!node) return;
        const toml::array* arr = node->as_array();
        if (!arr) {
            problems_.push_back(qualified(key) + " must be an array of strings");
            return;
        }
        out.clear();
        for (const auto& item : *arr) {
            const auto text = item.value<std::string>();
            if (!text) {
                problems_.push_back(qualified(key) + " must be an array of strings");
                return;
            }
            try {
                out.push_back(parse(*text));
            } catch (const Error& e) {
                problems_.push_back(qualified(key) + ": " + e.what());
            }
        }
    }

    void skip(std::string_view key) { used_.insert(std::string(key)); }

    void finish() {
        if (!table_) return;
        for (const auto& [key, node] : *table_) {
            if (!used_.count(std::string(key.str()))) problems_.push_back("unknown key " + qualified(key.str()));
        }
    }

    const toml::table* table() const { return table_; }

private:
    std::string qualified(std::string_view key) const { return name_.empty() ? std::string(key) : name_ + "." + std::string(key); }

    static bool read(const toml::node& n, double& out) {
        if (auto v = n.value_exact<double>()) return out = *v, true;
        if (auto v = n.value_exact<std::int64_t>()) return out = static_cast<double>(*v), true;
        return false;
    }
    static bool read(const toml::node& n, int& out) {
        auto v = n.value_exact<std::int64_t>();
        if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) return false;
        out = static_cast<int>(*v);
        return true;
    }
    static bool read(const toml::node& n, bool& out) {
        auto v = n.value_exact<bool>();
        return v ? (out = *v, true) : false;
    }
    static bool read(const toml::node& n, std::string& out) {
        auto v = n.value_exact<std::string>();
        return v ? (out = *v, true) : false;
    }
    // Seeds: non-negative integers, or decimal strings for values past the TOML integer range.
    static bool read(const toml::node& n, std::uint64_t& out) {
        if (auto v = n.value_exact<std::int64_t>()) {
            if (*v < 0) return false;
            out = static_cast<std::uint64_t>(*v);
            return true;
        }
        if (auto s = n.value_exact<std::string>()) {
            const auto* end = s->data() + s->size();
            auto [ptr, ec] = std::from_chars(s->data(), end, out);
            return ec == std::errc() && ptr == end && !s->empty();
        }
        return false;
    }

    const toml::table* table_;
    std::string name_;
    std::vector<std::string>& problems_;
    std::set<std::string> used_;
};

void read_scene(Section& s, SceneParams& p) {
    s.get("size", p.size);
    s.get("seed", p.seed);
    s.get("agb_lo", p.agb_lo);
    s.get("agb_hi", p.agb_hi);
    s.get("s2_noise", p.s2_noise);
    s.get("s1_noise", p.s1_noise);
    s.get("gpp_noise", p.gpp_noise);
    s.get("gpp_informative", p.gpp_informative);
    s.get("cloud_fraction", p.cloud_fraction);
    s.get("footprint_density", p.footprint_density);
    s.get("footprint_noise", p.footprint_noise);
    s.get("across_track_spacing", p.across_track_spacing);
    s.get("n_timestamps", p.n_timestamps);
    s.get("year", p.year);
    s.get("pixel_size", p.pixel_size);
    s.get("origin_x", p.origin_x);
    s.get("origin_y", p.origin_y);
    s.get("crs", p.crs_id);
    s.finish();
}

const toml::table* sub(const toml::table& root, std::string_view key, std::vector<std::string>& problems) {
    const toml::node* n = root.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) {
        problems.push_back(std::string(key) + " must be a table");
        return nullptr;
    }
    return n->as_table();
}

toml::table* ensure_path(toml::table& root, std::string_view dotted, std::string& last) {
    toml::table* t = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        if (dot == std::string_view::npos) {
            last = std::string(dotted.substr(start));
            return t;
        }
        const std::string part(dotted.substr(start, dot - start));
        toml::node* n = t->get(part);
        if (!n || !n->is_table()) {
            t->insert_or_assign(part, toml::table{});
            n = t->get(part);
        }
        t = n->as_table();
        start = dot + 1;
    }
}

void apply_override(toml::table& root, const Override& o) {
    if (o.first.empty()) throw Error(ErrorCode::InvalidArgument, "override with an empty key");
    std::string last;
    toml::table* target = ensure_path(root, o.first, last);
    try {
        toml::table parsed = toml::parse("v = " + o.second);
        target->insert_or_assign(last, std::move(*parsed.get("v")));
    } catch (const toml::parse_error&) {
        target->insert_or_assign(last, o.second);
    }
}

}  // namespace

RunConfig parse_run_config(std::string_view toml_text, std::span<const Override> overrides, std::string_view source) {
    toml::table root;
    try {
        root = toml::parse(toml_text, std::string(source));
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "cannot parse " << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
        throw Error(ErrorCode::Format, msg.str());
    }
    for (const auto& o : overrides) apply_override(root, o);

    RunConfig c;
    std::vector<std::string> problems;
    Section top(&root, "", problems);
    top.get("seed", c.seed);
    top.get("workers", c.workers);

    Section scene(sub(root, "scene", problems), "scene", problems);
    read_scene(scene, c.scene);
    top.skip("scene");
    c.validation_scene = c.scene;
    c.validation_scene.seed = c.scene.seed + 1;
    Section val(sub(root, "validation_scene", problems), "validation_scene", problems);
    read_scene(val, c.validation_scene);
    top.skip("validation_scene");

    Section comp(sub(root, "compositing", problems), "compositing", problems);
    comp.get("window", c.window);
    comp.get("method", c.composite_method);
    comp.finish();
    top.skip("compositing");

    Section data(sub(root, "data", problems), "data", problems);
    data.get_parsed("modality_subset", c.subset, parse_subset);
    data.get("train_fraction", c.train_fraction);
    data.get("split_unit", c.split_unit);
    data.get("split_seed", c.split_seed);
    data.finish();
    top.skip("data");

    Section model(sub(root, "model", problems), "model", problems);
    model.get_parsed("kind", c.model, parse_model_kind);
    model.skip("hyperparams");
    if (model.table()) {
        if (const toml::table* hp = sub(*model.table(), "hyperparams", problems)) {
            for (const auto& [key, node] : *hp) {
                if (auto v = node.value<double>()) c.hyperparams[std::string(key.str())] = *v;
                else problems.push_back("model.hyperparams." + std::string(key.str()) + " must be a number");
            }
        }
    }
    model.finish();
    top.skip("model");

    Section train(sub(root, "train", problems), "train", problems);
    train.get("learning_rate", c.train.learning_rate);
    train.get("batch_size", c.train.batch_size);
    train.get("max_epochs", c.train.max_epochs);
    train.get("patience", c.train.patience);
    train.get("crop_size", c.train.crop_size);
    train.get("augment", c.train.augment);
    train.get("hflip_p", c.train.hflip_p);
    train.get("vflip_p", c.train.vflip_p);
    train.get("depth", c.train.depth);
    train.get("base_width", c.train.base_width);
    train.get("tile_size", c.train.tile_size);
    train.get("n_runs", c.train.n_runs);
    train.finish();
    top.skip("train");

    Section search(sub(root, "search", problems), "search", problems);
    search.get("n_samples", c.search_samples);
    search.get("folds", c.folds);
    search.get("space", c.search_space);
    search.finish();
    top.skip("search");

    Section ablate(sub(root, "ablate", problems), "ablate", problems);
    ablate.get_list("models", c.ablate_models, parse_model_kind);
    ablate.get_list("subsets", c.ablate_subsets, parse_subset);
    ablate.finish();
    top.skip("ablate");

    Section zones(sub(root, "zones", problems), "zones", problems);
    zones.get("top_n", c.top_n);
    zones.finish();
    top.skip("zones");

    Section fire(sub(root, "wildfire", problems), "wildfire", problems);
    fire.get("cell_area_ha", c.cell_area_ha);
    fire.get_parsed("index", c.burn_index, [](const std::string& s) {
        if (s == "nbr") return BurnIndex::Nbr;
        if (s == "dnbr") return BurnIndex::Dnbr;
        throw Error(ErrorCode::InvalidArgument, "expected \"nbr\" or \"dnbr\"");
    });
    fire.finish();
    top.skip("wildfire");
    // Snapshot metadata.
    top.skip("tool_version");
    top.skip("command");
    top.skip("arguments");
    top.finish();

    c.train.seed = c.seed;
    try {
        c.validate();
    } catch (const Error& e) {
        collect(problems, "", [&] { throw e; });
    }
    if (!problems.empty()) {
        std::string msg = "invalid configuration (" + std::string(source) + "):";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw Error(ErrorCode::InvalidArgument, msg);
    }
    return c;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path, std::span<const Override> overrides) {
    if (!path) return parse_run_config("", overrides, "defaults");
    std::ifstream in(*path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read config " + path->string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), overrides, path->string());
}

namespace {

toml::table scene_table(const SceneParams& p) {
    return toml::table{{"size", p.size},
                       {"seed", static_cast<std::int64_t>(p.seed)},
                       {"agb_lo", p.agb_lo},
                       {"agb_hi", p.agb_hi},
                       {"s2_noise", p.s2_noise},
                       {"s1_noise", p.s1_noise},
                       {"gpp_noise", p.gpp_noise},
                       {"gpp_informative", p.gpp_informative},
                       {"cloud_fraction", p.cloud_fraction},
                       {"footprint_density", p.footprint_density},
                       {"footprint_noise", p.footprint_noise},
                       {"across_track_spacing", p.across_track_spacing},
                       {"n_timestamps", p.n_timestamps},
                       {"year", p.year},
                       {"pixel_size", p.pixel_size},
                       {"origin_x", p.origin_x},
                       {"origin_y", p.origin_y},
                       {"crs", p.crs_id}};
}

// Seeds above the signed 64-bit range are written as decimal strings.
void put_seed(toml::table& t, std::string_view key, std::uint64_t seed) {
    if (seed <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        t.insert_or_assign(key, static_cast<std::int64_t>(seed));
    } else {
        t.insert_or_assign(key, std::to_string(seed));
    }
}

toml::table config_table(const RunConfig& c) {
    toml::table root;
    put_seed(root, "seed", c.seed);
    root.insert_or_assign("workers", c.workers);
    toml::table scene = scene_table(c.scene), val = scene_table(c.validation_scene);
    put_seed(scene, "seed", c.scene.seed);
    put_seed(val, "seed", c.validation_scene.seed);
    root.insert_or_assign("scene", std::move(scene));
    root.insert_or_assign("validation_scene", std::move(val));
    root.insert_or_assign("compositing",
                          toml::table{{"window", c.resolved_window().str()}, {"method", c.composite_method}});
    toml::table data{{"modality_subset", std::string(subset_name(c.subset))},
                     {"train_fraction", c.train_fraction},
                     {"split_unit", c.resolved_split_unit() == SplitUnit::Tile ? "tile" : "pixel"}};
    put_seed(data, "split_seed", c.split_seed);
    root.insert_or_assign("data", std::move(data));
    toml::table hp;
    for (const auto& [k, v] : c.hyperparams) hp.insert_or_assign(k, v);
    root.insert_or_assign("model", toml::table{{"kind", std::string(model_kind_name(c.model))}, {"hyperparams", hp}});
    root.insert_or_assign("train", toml::table{{"learning_rate", c.train.learning_rate},
                                               {"batch_size", c.train.batch_size},
                                               {"max_epochs", c.train.max_epochs},
                                               {"patience", c.train.patience},
                                               {"crop_size", c.train.crop_size},
                                               {"augment", c.train.augment},
                                               {"hflip_p", c.train.hflip_p},
                                               {"vflip_p", c.train.vflip_p},
                                               {"depth", c.train.depth},
                                               {"base_width", c.train.base_width},
                                               {"tile_size", c.train.tile_size},
                                               {"n_runs", c.train.n_runs}});
    root.insert_or_assign("search", toml::table{{"n_samples", c.search_samples},
                                                {"folds", c.folds},
                                                {"space", c.search_space}});
    toml::array models, subsets;
    for (ModelKind m : c.ablate_models) models.push_back(std::string(model_kind_name(m)));
    for (ModalitySubset s : c.ablate_subsets) subsets.push_back(std::string(subset_name(s)));
    root.insert_or_assign("ablate", toml::table{{"models", models}, {"subsets", subsets}});
    root.insert_or_assign("zones", toml::table{{"top_n", c.top_n}});
    root.insert_or_assign("wildfire", toml::table{{"cell_area_ha", c.cell_area_ha},
                                                  {"index", std::string(burn_index_name(c.burn_index))}});
    return root;
}

}  // namespace

std::string RunConfig::to_toml() const {
    std::ostringstream out;
    out << config_table(*this) << "\n";
    return out.str();
}

void write_config_snapshot(const std::filesystem::path& dir, std::string_view command, const RunConfig& config,
                           const std::map<std::string, std::string>& arguments) {
    std::filesystem::create_directories(dir.empty() ? "." : dir);
    const auto path = (dir.empty() ? std::filesystem::path(".") : dir) / (std::string(command) + ".config.toml");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    toml::table root = config_table(config);
    root.insert_or_assign("tool_version", std::string(version()));
    root.insert_or_assign("command", std::string(command));
    toml::table args;
    for (const auto& [k, v] : arguments) args.insert_or_assign(k, v);
    root.insert_or_assign("arguments", std::move(args));
    out << "# agbmap " << version() << " resolved configuration; loadable with --config\n" << root << "\n";
}

}  // namespace agbmap
