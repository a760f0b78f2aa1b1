#include "agbmap/wildfire.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "agbmap/error.hpp"
#include "agbmap/image.hpp"

namespace agbmap {

namespace {

void require_same_grid(const Raster& a, const Raster& b, const char* what) {
    if (!same_footprint(a.grid(), b.grid())) throw Error(ErrorCode::GridMismatch, std::string(what) + " are on different grids");
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

Raster nbr(const Raster& b08, const Raster& b12) {
    require_same_grid(b08, b12, "B08 and B12");
    const auto nir = b08.plane(0), swir = b12.plane(0);
    std::vector<double> out(b08.pixel_count(), nan());
    for (std::size_t p = 0; p < out.size(); ++p) {
        if (!b08.valid(p) || !b12.valid(p)) continue;
        const double sum = nir[p] + swir[p];
        if (sum < 1e-9) continue;
        out[p] = (nir[p] - swir[p]) / sum;
    }
    return make_single_band(b08.grid(), {Modality::S2, "NBR"}, std::move(out));
}

Raster dnbr(const Raster& nbr_before, const Raster& nbr_after) {
    require_same_grid(nbr_before, nbr_after, "NBR rasters");
    const auto pre = nbr_before.plane(0), post = nbr_after.plane(0);
    std::vector<double> out(pre.size(), nan());
    for (std::size_t p = 0; p < out.size(); ++p)
        if (nbr_before.valid(p) && nbr_after.valid(p)) out[p] = pre[p] - post[p];
    return make_single_band(nbr_before.grid(), {Modality::S2, "dNBR"}, std::move(out));
}

Raster agb_delta(const Raster& after, const Raster& before) {
    require_same_grid(after, before, "AGB maps");
    const auto a = after.plane(0), b = before.plane(0);
    std::vector<double> out(a.size(), nan());
    for (std::size_t p = 0; p < out.size(); ++p)
        if (after.valid(p) && before.valid(p)) out[p] = a[p] - b[p];
    return make_single_band(after.grid(), {Modality::TARGET, "dAGB"}, std::move(out));
}

std::string_view burn_index_name(BurnIndex index) noexcept {
    return index == BurnIndex::Nbr ? "nbr" : "dnbr";
}

ImpactReport impact_report(const Raster& delta, const Raster& burn_index, double cell_area_ha, BurnIndex index) {
    require_same_grid(delta, burn_index, "delta AGB and burn index");
    if (!(cell_area_ha > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell area must be positive");
    ImpactReport r;
    r.delta_agb = delta;
    r.burn_index = burn_index;
    r.index = index;
    r.cell_area_ha = cell_area_ha;

    const auto d = delta.plane(0), x = burn_index.plane(0);
    double sum_d = 0.0, sum_x = 0.0;
    for (std::size_t p = 0; p < d.size(); ++p) {
        if (delta.valid(p)) r.total_loss += std::max(0.0, -d[p]) * cell_area_ha;
        if (!delta.valid(p) || !burn_index.valid(p)) continue;
        ++r.n_pixels;
        sum_d += d[p];
        sum_x += x[p];
    }
    if (r.n_pixels < 2) {
        throw Error(ErrorCode::InsufficientOverlap,
                    std::to_string(r.n_pixels) + " jointly valid pixels; at least 2 are needed");
    }
    const double n = static_cast<double>(r.n_pixels);
    const double md = sum_d / n, mx = sum_x / n;
    double sdd = 0.0, sxx = 0.0, sdx = 0.0;
    for (std::size_t p = 0; p < d.size(); ++p) {
        if (!delta.valid(p) || !burn_index.valid(p)) continue;
        sdd += (d[p] - md) * (d[p] - md);
        sxx += (x[p] - mx) * (x[p] - mx);
        sdx += (d[p] - md) * (x[p] - mx);
    }
    r.correlation_defined = sdd > 0.0 && sxx > 0.0;
    r.correlation = r.correlation_defined ? sdx / std::sqrt(sdd * sxx) : nan();
    return r;
}

std::string impact_report_json(const ImpactReport& r) {
    nlohmann::ordered_json j;
    j["total_loss_mg_c"] = r.total_loss;
    j["correlation"] = r.correlation_defined ? nlohmann::ordered_json(r.correlation) : nlohmann::ordered_json(nullptr);
    j["correlation_defined"] = r.correlation_defined;
    j["n_pixels"] = r.n_pixels;
    j["cell_area_ha"] = r.cell_area_ha;
    j["burn_index"] = burn_index_name(r.index);
    j["interpretation"] = r.index == BurnIndex::Nbr ? "lower NBR suggests a burned area"
                                                     : "higher dNBR (pre minus post NBR) suggests a more severe burn";
    j["units"] = {{"delta_agb", "Mg C/ha"}, {"total_loss", "Mg C"}};
    return j.dump(2) + "\n";
}

void write_impact_panel(const std::filesystem::path& path, const ImpactReport& r) {
    double dmax = 0.0;
    for (std::size_t p = 0; p < r.delta_agb.pixel_count(); ++p)
        if (r.delta_agb.valid(p)) dmax = std::max(dmax, std::abs(r.delta_agb.plane(0)[p]));
    if (dmax == 0.0) dmax = 1.0;
    const double ilo = r.index == BurnIndex::Nbr ? -1.0 : -0.5, ihi = 1.0;

    const Image left = render_raster(r.delta_agb, 0, -dmax, dmax, diverging);
    const Image right = render_raster(r.burn_index, 0, ilo, ihi, viridis);
    const Image lbar = colorbar(left.height(), -dmax, dmax, diverging);
    const Image rbar = colorbar(right.height(), ilo, ihi, viridis);
    const int gap = 12, title = 20;
    Image panel(left.width() + lbar.width() + right.width() + rbar.width() + 4 * gap, left.height() + title + gap);
    int x = gap;
    panel.text(x, 6, "AGB change (Mg C/ha)", {0, 0, 0});
    panel.blit(left, x, title);
    x += left.width() + 4;
    panel.blit(lbar, x, title);
    x += lbar.width() + 2 * gap;
    panel.text(x, 6, r.index == BurnIndex::Nbr ? "NBR after fire" : "dNBR", {0, 0, 0});
    panel.blit(right, x, title);
    x += right.width() + 4;
    panel.blit(rbar, x, title);
    panel.write_png(path);
}

}  // namespace agbmap
