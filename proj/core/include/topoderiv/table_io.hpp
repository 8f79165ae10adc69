#pragma once

#include <string>
#include <vector>

#include "topoderiv/rates.hpp"
#include "topoderiv/sweep.hpp"

namespace topoderiv {

/// %.17g, the round-trip-exact format used by every CSV cell.
std::string csv_number(double v);

/// Writes rows of doubles under a header line, cells in %.17g with NaN cells
/// left empty, rows ending in a bare newline. Identical data rewrites to a
/// byte-identical file.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

/// Oracle curve: columns eps, j, h, dofs, residual.
void write_sweep_csv(const std::string& path, const SweepCurve& curve);

/// Companion baseline: columns eps, j0. The unperturbed cost is re-solved on
/// each point's own fitted mesh so the increment j - j0 is cancellation-free;
/// this table records those per-mesh baselines.
void write_sweep_baseline_csv(const std::string& path, const SweepCurve& curve);

/// Rate table: columns eps, value, slope, where row i >= 1 carries the
/// log-log slope between rows i-1 and i and the first slope cell is empty.
void write_rate_csv(const std::string& path, const RateReport& report);

/// A named sample set for the log-log plot writer.
struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal self-contained SVG: one polyline with markers per series on a
/// log-log canvas of absolute values (non-positive magnitudes are dropped),
/// decade grid lines, and a legend. Deterministic output for equal input.
void write_loglog_svg(const std::string& path, const std::string& title,
                      const std::vector<PlotSeries>& series);

}  // namespace topoderiv
