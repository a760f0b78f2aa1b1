#pragma once

#include <filesystem>
#include <string>

#include "agbmap/raster.hpp"

namespace agbmap {

/// 30 m cells.
inline constexpr double kDefaultCellAreaHa = 0.09;

/// (b08 - b12) / (b08 + b12); pixels where the sum is below 1e-9 are invalid.
/// Lower values indicate burned surfaces. Throws GridMismatch.
Raster nbr(const Raster& b08, const Raster& b12);
/// Pre-fire minus post-fire NBR; higher values mean more severe burns.
Raster dnbr(const Raster& nbr_before, const Raster& nbr_after);
/// after - before where both are valid. Throws GridMismatch.
Raster agb_delta(const Raster& after, const Raster& before);

enum class BurnIndex { Nbr, Dnbr };
std::string_view burn_index_name(BurnIndex index) noexcept;  // "nbr", "dnbr"

struct ImpactReport {
    Raster delta_agb;           // Mg C/ha
    Raster burn_index;          // NBR after the fire, or dNBR
    BurnIndex index = BurnIndex::Nbr;
    double total_loss = 0.0;    // Mg C, sum of max(0, -delta) x cell area
    double correlation = 0.0;   // Pearson r over jointly valid pixels; NaN when undefined
    bool correlation_defined = false;
    std::size_t n_pixels = 0;   // jointly valid
    double cell_area_ha = kDefaultCellAreaHa;
};

/// Throws GridMismatch, InsufficientOverlap (fewer than 2 jointly valid pixels).
ImpactReport impact_report(const Raster& delta, const Raster& burn_index, double cell_area_ha = kDefaultCellAreaHa,
                           BurnIndex index = BurnIndex::Nbr);

std::string impact_report_json(const ImpactReport& report);
/// Delta AGB next to the burn index, each with its colour bar.
void write_impact_panel(const std::filesystem::path& path, const ImpactReport& report);

}  // namespace agbmap
