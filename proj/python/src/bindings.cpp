#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "agbmap/config.hpp"
#include "agbmap/error.hpp"
#include "agbmap/evaluation.hpp"
#include "agbmap/geotiff.hpp"
#include "agbmap/pipeline.hpp"
#include "agbmap/training.hpp"
#include "agbmap/wildfire.hpp"

namespace py = pybind11;
using namespace agbmap;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

template <class T>
py::array_t<T> to_array(std::span<const T> v, std::vector<py::ssize_t> shape) {
    py::array_t<T> out(shape);
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<bool> mask_array(std::span<const std::uint8_t> m, int h, int w) {
    py::array_t<bool> out({h, w});
    bool* d = out.mutable_data();
    for (std::size_t i = 0; i < m.size(); ++i) d[i] = m[i] != 0;
    return out;
}

py::array_t<bool> flat_mask(std::span<const std::uint8_t> m) {
    return mask_array(m, 1, static_cast<int>(m.size())).reshape({static_cast<py::ssize_t>(m.size())});
}

std::vector<std::uint8_t> mask_vector(const U8& a) { return {a.data(), a.data() + a.size()}; }

std::vector<std::string> channel_names(const Raster& r) {
    std::vector<std::string> out;
    for (const auto& c : r.channels()) out.push_back(c.str());
    return out;
}

Raster make_raster(const Grid& grid, const std::vector<std::string>& channels, const F64& data,
                   const std::optional<U8>& valid) {
    std::vector<ChannelId> ids;
    for (const auto& c : channels) ids.push_back(ChannelId::parse(c));
    const auto n = static_cast<py::ssize_t>(grid.pixel_count());
    if (data.size() != n * static_cast<py::ssize_t>(ids.size())) {
        throw Error(ErrorCode::ShapeMismatch, "data must hold channels x height x width values");
    }
    std::vector<double> values(data.data(), data.data() + data.size());
    std::vector<std::uint8_t> mask(grid.pixel_count(), 1);
    if (valid) {
        if (valid->size() != n) throw Error(ErrorCode::ShapeMismatch, "valid must be height x width");
        mask = mask_vector(*valid);
    } else {
        for (std::size_t c = 0; c < ids.size(); ++c)
            for (std::size_t p = 0; p < grid.pixel_count(); ++p)
                if (!std::isfinite(values[c * grid.pixel_count() + p])) mask[p] = 0;
    }
    for (std::size_t p = 0; p < mask.size(); ++p)
        if (!mask[p])
            for (std::size_t c = 0; c < ids.size(); ++c) values[c * grid.pixel_count() + p] = NAN;
    return Raster(grid, std::move(ids), std::move(values), std::move(mask));
}

std::vector<std::string> date_strings(const SceneSeries& s) {
    std::vector<std::string> out;
    for (const auto& d : s.timestamps()) out.push_back(format_date(d));
    return out;
}

DateWindow window_or_summer(const std::optional<std::string>& w, int year) {
    return w ? DateWindow::parse(*w) : summer_window(year);
}

SplitUnit parse_unit(const std::string& s) {
    if (s == "pixel") return SplitUnit::Pixel;
    if (s == "tile") return SplitUnit::Tile;
    throw Error(ErrorCode::InvalidArgument, "split unit must be 'pixel' or 'tile', got '" + s + "'");
}

py::dict report_row(const EvalRow& r) {
    py::dict d;
    d["model"] = std::string(model_kind_name(r.model));
    d["modality_subset"] = std::string(subset_name(r.subset));
    d["split"] = std::string(eval_split_name(r.split));
    d["rmse_mean"] = r.rmse_mean;
    d["rmse_std"] = r.rmse_std;
    d["n_runs"] = r.n_runs;
    d["n_pixels"] = r.n_pixels;
    return d;
}

}  // namespace

PYBIND11_MODULE(_agbmap, m) {
    m.doc() = "Native core of the agbmap biomass mapping pipeline";
    m.attr("__version__") = std::string(version());

    py::register_exception<Error>(m, "AgbmapError", PyExc_RuntimeError);

    py::class_<Grid>(m, "Grid")
        .def(py::init([](int width, int height, double origin_x, double origin_y, double pixel_size, std::string crs,
                         bool north_up) {
                 Grid g;
                 g.width = width;
                 g.height = height;
                 g.origin_x = origin_x;
                 g.origin_y = origin_y;
                 g.pixel_size_x = g.pixel_size_y = pixel_size;
                 g.crs_id = std::move(crs);
                 g.north_up = north_up;
                 g.validate();
                 return g;
             }),
             py::arg("width"), py::arg("height"), py::arg("origin_x") = 0.0, py::arg("origin_y") = 0.0,
             py::arg("pixel_size") = 30.0, py::arg("crs") = "EPSG:5070", py::arg("north_up") = true)
        .def_readwrite("width", &Grid::width)
        .def_readwrite("height", &Grid::height)
        .def_readwrite("origin_x", &Grid::origin_x)
        .def_readwrite("origin_y", &Grid::origin_y)
        .def_readwrite("pixel_size_x", &Grid::pixel_size_x)
        .def_readwrite("pixel_size_y", &Grid::pixel_size_y)
        .def_readwrite("north_up", &Grid::north_up)
        .def_readwrite("crs", &Grid::crs_id)
        .def("__eq__", [](const Grid& a, const Grid& b) { return a == b; })
        .def("__repr__", [](const Grid& g) {
            return "Grid(" + std::to_string(g.width) + "x" + std::to_string(g.height) + ", " + g.crs_id + ")";
        });

    py::class_<Raster>(m, "Raster")
        .def(py::init(&make_raster), py::arg("grid"), py::arg("channels"), py::arg("data"),
             py::arg("valid") = std::nullopt,
             "data is (channels, height, width); without `valid`, a pixel is valid when all its values are finite")
        .def_property_readonly("grid", &Raster::grid)
        .def_property_readonly("channels", &channel_names)
        .def_property_readonly("shape", [](const Raster& r) {
            return py::make_tuple(r.n_channels(), r.height(), r.width());
        })
        .def("values", [](const Raster& r) {
            return to_array<double>(r.data(), {static_cast<py::ssize_t>(r.n_channels()), r.height(), r.width()});
        })
        .def("valid_mask", [](const Raster& r) { return mask_array(r.valid_mask(), r.height(), r.width()); })
        .def("valid_count", &Raster::valid_count)
        .def("select", [](const Raster& r, const std::vector<std::string>& names) {
            std::vector<ChannelId> ids;
            for (const auto& n : names) ids.push_back(ChannelId::parse(n));
            return r.select(ids);
        });

    m.def("read_raster", &read_raster, py::arg("path"));
    m.def("write_raster", &write_raster, py::arg("path"), py::arg("raster"),
          py::arg("metadata") = std::map<std::string, std::string>{});
    m.def("bilinear_resample", &bilinear_resample, py::arg("src"), py::arg("target"),
          py::call_guard<py::gil_scoped_release>());

    py::class_<SceneSeries>(m, "SceneSeries")
        .def(py::init([](std::vector<Raster> scenes, const std::vector<std::string>& dates, std::vector<Raster> scl) {
                 std::vector<Date> ds;
                 for (const auto& d : dates) ds.push_back(parse_date(d));
                 return SceneSeries(std::move(scenes), std::move(ds), std::move(scl));
             }),
             py::arg("scenes"), py::arg("dates"), py::arg("scl") = std::vector<Raster>{})
        .def_property_readonly("scenes", &SceneSeries::scenes)
        .def_property_readonly("dates", &date_strings)
        .def_property_readonly("scl", &SceneSeries::scl)
        .def("__len__", &SceneSeries::size);

    m.def("median_composite", &median_composite, py::arg("series"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "temporal_mean",
        [](const SceneSeries& s, const std::string& window) { return temporal_mean(s, DateWindow::parse(window)); },
        py::arg("series"), py::arg("window"));
    m.def("cloud_mask", [](const Raster& scl) { return mask_array(cloud_mask(scl), scl.height(), scl.width()); },
          py::arg("scl"), "True where the SCL class is usable");

    py::class_<Footprint>(m, "Footprint")
        .def(py::init([](double x, double y, double agb, bool quality, std::string source) {
                 return Footprint{x, y, agb, quality, std::move(source)};
             }),
             py::arg("x"), py::arg("y"), py::arg("agb"), py::arg("quality") = true, py::arg("source_id") = "")
        .def_readwrite("x", &Footprint::x)
        .def_readwrite("y", &Footprint::y)
        .def_readwrite("agb", &Footprint::agb)
        .def_readwrite("quality", &Footprint::quality)
        .def_readwrite("source_id", &Footprint::source_id);

    py::class_<FootprintSet>(m, "FootprintSet")
        .def(py::init([](std::vector<Footprint> f, std::string crs) { return FootprintSet{std::move(f), std::move(crs)}; }),
             py::arg("footprints"), py::arg("crs") = "EPSG:5070")
        .def_readwrite("footprints", &FootprintSet::footprints)
        .def_readwrite("crs", &FootprintSet::crs_id)
        .def("__len__", [](const FootprintSet& s) { return s.footprints.size(); });
    m.def("read_footprints_csv", &read_footprints_csv, py::arg("path"), py::arg("crs"));
    m.def("write_footprints_csv", &write_footprints_csv, py::arg("path"), py::arg("footprints"));

    py::class_<MatchResult>(m, "MatchResult")
        .def_readonly("target", &MatchResult::target)
        .def_property_readonly("mask", [](const MatchResult& r) {
            return mask_array(r.mask, r.target.height(), r.target.width());
        })
        .def_readonly("n_total", &MatchResult::n_total)
        .def_readonly("n_assigned", &MatchResult::n_assigned)
        .def_readonly("n_out_of_bounds", &MatchResult::n_out_of_bounds)
        .def_readonly("n_rejected_quality", &MatchResult::n_rejected_quality);
    m.def("match_footprints", &match_footprints, py::arg("footprints"), py::arg("grid"));

    py::class_<SceneParams>(m, "SceneParams")
        .def(py::init<>())
        .def_readwrite("size", &SceneParams::size)
        .def_readwrite("seed", &SceneParams::seed)
        .def_readwrite("agb_lo", &SceneParams::agb_lo)
        .def_readwrite("agb_hi", &SceneParams::agb_hi)
        .def_readwrite("s2_noise", &SceneParams::s2_noise)
        .def_readwrite("s1_noise", &SceneParams::s1_noise)
        .def_readwrite("gpp_noise", &SceneParams::gpp_noise)
        .def_readwrite("gpp_informative", &SceneParams::gpp_informative)
        .def_readwrite("cloud_fraction", &SceneParams::cloud_fraction)
        .def_readwrite("footprint_density", &SceneParams::footprint_density)
        .def_readwrite("footprint_noise", &SceneParams::footprint_noise)
        .def_readwrite("across_track_spacing", &SceneParams::across_track_spacing)
        .def_readwrite("n_timestamps", &SceneParams::n_timestamps)
        .def_readwrite("year", &SceneParams::year)
        .def_readwrite("pixel_size", &SceneParams::pixel_size)
        .def_readwrite("origin_x", &SceneParams::origin_x)
        .def_readwrite("origin_y", &SceneParams::origin_y)
        .def_readwrite("crs", &SceneParams::crs_id)
        .def("grid", &SceneParams::grid)
        .def("validate", &SceneParams::validate);

    py::class_<SyntheticScene>(m, "SyntheticScene")
        .def_readonly("true_agb", &SyntheticScene::true_agb)
        .def_readonly("s2", &SyntheticScene::s2)
        .def_readonly("s1", &SyntheticScene::s1)
        .def_readonly("gpp", &SyntheticScene::gpp);
    m.def("generate_scene", &generate_scene, py::arg("params"), py::call_guard<py::gil_scoped_release>());
    m.def("sample_footprints", &sample_footprints, py::arg("true_agb"), py::arg("params"));
    m.def("generate_zones", &generate_zones, py::arg("grid"), py::arg("seed"), py::arg("unclassified_fraction") = 0.02);

    py::class_<SiteLayers>(m, "SiteLayers")
        .def_readonly("s2", &SiteLayers::s2)
        .def_readonly("s1", &SiteLayers::s1)
        .def_readonly("gpp", &SiteLayers::gpp)
        .def_readonly("match", &SiteLayers::match);
    m.def(
        "prepare_site",
        [](const SyntheticScene& scene, const FootprintSet& fps, const std::optional<std::string>& window) {
            const DateWindow w = window_or_summer(window, static_cast<int>(scene.s2.timestamps().front().year()));
            py::gil_scoped_release release;
            return prepare_site(scene, fps, w);
        },
        py::arg("scene"), py::arg("footprints"), py::arg("window") = std::nullopt,
        "Composite, resample and match a site; the window defaults to the scene year's summer");

    py::class_<Datacube>(m, "Datacube")
        .def_readonly("inputs", &Datacube::inputs)
        .def_readonly("target", &Datacube::target)
        .def_property_readonly("target_mask", [](const Datacube& c) {
            return mask_array(c.target_mask, c.grid().height, c.grid().width);
        })
        .def_property_readonly("norm_stats", [](const Datacube& c) {
            std::vector<std::pair<double, double>> out;
            for (const auto& s : c.norm_stats) out.emplace_back(s.mean, s.std);
            return out;
        })
        .def_property_readonly("subset", [](const Datacube& c) { return std::string(subset_name(c.subset)); })
        .def_property_readonly("normalized", &Datacube::normalized)
        .def("supervised_count", &Datacube::supervised_count);
    m.def(
        "site_cube", [](const SiteLayers& l, const std::string& subset) { return site_cube(l, parse_subset(subset)); },
        py::arg("layers"), py::arg("subset") = "SIF/S1/S2");
    m.def(
        "normalize",
        [](const Datacube& cube, const std::optional<Datacube>& stats_from) {
            if (!stats_from) return normalize(cube);
            return normalize(cube, std::span<const ChannelStats>(stats_from->norm_stats));
        },
        py::arg("cube"), py::arg("stats_from") = std::nullopt,
        "Z-score the inputs with this cube's statistics, or with those of `stats_from`");
    m.def("denormalize", &denormalize, py::arg("cube"));
    m.def("read_cube", &read_cube, py::arg("path"));
    m.def("write_cube", &write_cube, py::arg("path"), py::arg("cube"), py::arg("split_seed") = std::nullopt);

    py::class_<CubeSplit>(m, "CubeSplit")
        .def_property_readonly("unit", [](const CubeSplit& s) { return s.unit == SplitUnit::Tile ? "tile" : "pixel"; })
        .def_property_readonly("train_mask", [](const CubeSplit& s) { return flat_mask(s.train_mask); })
        .def_property_readonly("test_mask", [](const CubeSplit& s) { return flat_mask(s.test_mask); })
        .def_property_readonly("n_train_tiles", [](const CubeSplit& s) { return s.train_tiles.size(); })
        .def_property_readonly("n_test_tiles", [](const CubeSplit& s) { return s.test_tiles.size(); });
    m.def(
        "split",
        [](const Datacube& cube, double train_fraction, const std::string& unit, std::uint64_t seed, int tile_size) {
            return split(cube, SplitSpec{train_fraction, parse_unit(unit), seed, tile_size});
        },
        py::arg("cube"), py::arg("train_fraction") = 0.9, py::arg("unit") = "pixel", py::arg("seed") = 0,
        py::arg("tile_size") = 512, "Flattened (row-major) train/test masks over supervised pixels");
    m.def("kfold_partition", &kfold_partition, py::arg("n_units"), py::arg("k"), py::arg("seed"));

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("crop_size", &TrainConfig::crop_size)
        .def_readwrite("augment", &TrainConfig::augment)
        .def_readwrite("hflip_p", &TrainConfig::hflip_p)
        .def_readwrite("vflip_p", &TrainConfig::vflip_p)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("n_runs", &TrainConfig::n_runs)
        .def_readwrite("depth", &TrainConfig::depth)
        .def_readwrite("base_width", &TrainConfig::base_width)
        .def_readwrite("tile_size", &TrainConfig::tile_size)
        .def("validate", &TrainConfig::validate);

    py::class_<ModelArtifact>(m, "ModelArtifact")
        .def_property_readonly("kind", [](const ModelArtifact& a) { return std::string(model_kind_name(a.kind)); })
        .def_property_readonly("subset", [](const ModelArtifact& a) { return std::string(subset_name(a.subset)); })
        .def_property_readonly("channels", [](const ModelArtifact& a) {
            std::vector<std::string> out;
            for (const auto& c : a.channels) out.push_back(c.str());
            return out;
        })
        .def_readonly("best_epoch", &ModelArtifact::best_epoch)
        .def_readonly("train_seed", &ModelArtifact::train_seed)
        .def_property_readonly("history", [](const ModelArtifact& a) {
            std::vector<std::tuple<int, double, double>> out;
            for (const auto& e : a.history) out.emplace_back(e.epoch, e.train, e.test);
            return out;
        })
        .def_property_readonly("singular", &ModelArtifact::singular);

    m.def(
        "train_model",
        [](const Datacube& cube, const CubeSplit& sp, const std::string& model, const Hyperparams& hp,
           const std::optional<TrainConfig>& train, std::uint64_t seed) {
            ModelSpec spec{parse_model_kind(model), hp, train.value_or(TrainConfig{})};
            py::gil_scoped_release release;
            return train_model(cube, sp, spec, seed);
        },
        py::arg("cube"), py::arg("split"), py::arg("model"), py::arg("hyperparams") = Hyperparams{},
        py::arg("train") = std::nullopt, py::arg("seed") = 0);
    m.def("save_artifact", &save_artifact, py::arg("path"), py::arg("artifact"));
    m.def("load_artifact", &load_artifact, py::arg("path"));
    m.def(
        "evaluate",
        [](const ModelArtifact& a, const Datacube& cube, const std::optional<U8>& region) {
            const std::vector<std::uint8_t> r = region ? mask_vector(*region) : std::vector<std::uint8_t>{};
            EvalResult e;
            {
                py::gil_scoped_release release;
                e = evaluate(a, cube, r);
            }
            return py::make_tuple(e.rmse, e.n_pixels);
        },
        py::arg("artifact"), py::arg("cube"), py::arg("region") = std::nullopt,
        "(rmse, n_pixels) over supervised pixels, optionally inside a flattened region mask");
    m.def(
        "predict_dense",
        [](const ModelArtifact& a, const Datacube& cube, int overlap) {
            PredictOptions o;
            o.overlap = overlap;
            py::gil_scoped_release release;
            return predict_dense(a, prepare_cube(a, cube), o);
        },
        py::arg("artifact"), py::arg("cube"), py::arg("overlap") = 64);
    m.def("clamp_nonnegative", &clamp_nonnegative, py::arg("prediction"));

    m.def(
        "masked_rmse",
        [](const F64& pred, const F64& target, const U8& mask) {
            return masked_rmse({pred.data(), static_cast<std::size_t>(pred.size())},
                               {target.data(), static_cast<std::size_t>(target.size())}, mask_vector(mask))
                .loss;
        },
        py::arg("pred"), py::arg("target"), py::arg("mask"));
    m.def(
        "masked_rmse_grad",
        [](const F64& pred, const F64& target, const U8& mask) {
            const auto g = masked_rmse_grad({pred.data(), static_cast<std::size_t>(pred.size())},
                                            {target.data(), static_cast<std::size_t>(target.size())}, mask_vector(mask));
            return to_array<double>(g, {static_cast<py::ssize_t>(g.size())});
        },
        py::arg("pred"), py::arg("target"), py::arg("mask"));

    m.def("nbr", &nbr, py::arg("b08"), py::arg("b12"));
    m.def("dnbr", &dnbr, py::arg("nbr_before"), py::arg("nbr_after"));
    m.def("agb_delta", &agb_delta, py::arg("after"), py::arg("before"));
    py::class_<ImpactReport>(m, "ImpactReport")
        .def_readonly("delta_agb", &ImpactReport::delta_agb)
        .def_readonly("burn_index", &ImpactReport::burn_index)
        .def_readonly("total_loss", &ImpactReport::total_loss)
        .def_readonly("correlation", &ImpactReport::correlation)
        .def_readonly("correlation_defined", &ImpactReport::correlation_defined)
        .def_readonly("n_pixels", &ImpactReport::n_pixels)
        .def_readonly("cell_area_ha", &ImpactReport::cell_area_ha)
        .def("to_json", &impact_report_json);
    m.def(
        "impact_report",
        [](const Raster& delta, const Raster& index, double cell_area_ha, const std::string& kind) {
            return impact_report(delta, index, cell_area_ha, kind == "dnbr" ? BurnIndex::Dnbr : BurnIndex::Nbr);
        },
        py::arg("delta"), py::arg("burn_index"), py::arg("cell_area_ha") = kDefaultCellAreaHa, py::arg("index") = "nbr");

    py::class_<BurnParams>(m, "BurnParams")
        .def(py::init<>())
        .def_readwrite("scene", &BurnParams::scene)
        .def_readwrite("center_col", &BurnParams::center_col)
        .def_readwrite("center_row", &BurnParams::center_row)
        .def_readwrite("radius", &BurnParams::radius)
        .def_readwrite("loss_fraction", &BurnParams::loss_fraction)
        .def_readwrite("map_noise", &BurnParams::map_noise);
    py::class_<BurnScene>(m, "BurnScene")
        .def_readonly("before_agb", &BurnScene::before_agb)
        .def_readonly("after_agb", &BurnScene::after_agb)
        .def_readonly("b08_before", &BurnScene::b08_before)
        .def_readonly("b12_before", &BurnScene::b12_before)
        .def_readonly("b08_after", &BurnScene::b08_after)
        .def_readonly("b12_after", &BurnScene::b12_after)
        .def_readonly("true_loss_mg", &BurnScene::true_loss_mg)
        .def_readonly("cell_area_ha", &BurnScene::cell_area_ha);
    m.def("generate_burn_scene", &generate_burn_scene, py::arg("params") = BurnParams{});

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("workers", &RunConfig::workers)
        .def_readwrite("scene", &RunConfig::scene)
        .def_readwrite("validation_scene", &RunConfig::validation_scene)
        .def_readwrite("train", &RunConfig::train)
        .def("to_toml", &RunConfig::to_toml)
        .def("validate", &RunConfig::validate);
    m.def(
        "load_config",
        [](const std::optional<std::filesystem::path>& path, const std::map<std::string, std::string>& overrides) {
            std::vector<Override> ov(overrides.begin(), overrides.end());
            return load_run_config(path, ov);
        },
        py::arg("path") = std::nullopt, py::arg("overrides") = std::map<std::string, std::string>{},
        "Resolved run configuration; overrides map dotted keys to TOML literals");

    py::class_<AblationResult>(m, "AblationResult")
        .def_property_readonly("rows", [](const AblationResult& r) {
            py::list out;
            for (const auto& row : r.report.rows) out.append(report_row(row));
            return out;
        })
        .def("table", [](const AblationResult& r) { return format_report_table(r.report); })
        .def("report_csv", [](const AblationResult& r) { return format_report_csv(r.report); });
    m.def(
        "ablation",
        [](const RunConfig& cfg, const std::optional<std::vector<std::string>>& models,
           const std::optional<std::vector<std::string>>& subsets, std::optional<int> n_runs,
           const std::function<void(py::dict)>& progress) {
            AblationConfig a = cfg.ablation();
            if (models) {
                a.models.clear();
                for (const auto& s : *models) a.models.push_back(parse_model_kind(s));
            }
            if (subsets) {
                a.subsets.clear();
                for (const auto& s : *subsets) a.subsets.push_back(parse_subset(s));
            }
            if (n_runs) a.n_runs = *n_runs;
            AblationProgress cb;
            if (progress) {
                cb = [&progress](const RunRecord& r) {
                    py::gil_scoped_acquire acquire;
                    py::dict d;
                    d["model"] = std::string(model_kind_name(r.model));
                    d["modality_subset"] = std::string(subset_name(r.subset));
                    d["run"] = r.run;
                    d["testing_rmse"] = r.testing.rmse;
                    d["validation_rmse"] = r.validation.rmse;
                    progress(d);
                };
            }
            py::gil_scoped_release release;
            return ablation(a, cb);
        },
        py::arg("config"), py::arg("models") = std::nullopt, py::arg("subsets") = std::nullopt,
        py::arg("n_runs") = std::nullopt, py::arg("progress") = nullptr);
}
