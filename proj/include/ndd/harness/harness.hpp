#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ndd::harness {

/// Numeric CSV: one header row, then rows of doubles ("nan" allowed).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const;  // throws DataError
};

Table read_table(const std::filesystem::path& path);
/// Values are printed with %.10g so reruns produce identical bytes.
void write_table(const std::filesystem::path& path, const Table& t);
std::string format_value(double v);

/// Per-row mean and sample standard deviation (0 for one seed) of every
/// column except the first, which must agree across tables. Output columns:
/// <first>, seeds, then <col>_mean, <col>_std for each column.
Table summarize(const std::vector<Table>& seeds);

/// Every metrics.csv below `dir`, sorted by path.
std::vector<std::filesystem::path> find_metrics(const std::filesystem::path& dir);

struct Series {
    std::string name;
    std::vector<double> x, mean, spread;  // spread: half-width of the band, may be empty
};

/// Standalone SVG line plot; NaN points are skipped.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::vector<Series>& series);

/// Writes summary.csv and one <column>.svg per metric into `out`; returns
/// the files written. Throws DataError when `dir` holds no metrics.
std::vector<std::filesystem::path> report(const std::filesystem::path& dir, const std::filesystem::path& out);

/// FNV-1a 64-bit, as 16 hex digits.
std::string config_hash(std::string_view text);

/// $NDD_OUTPUT_ROOT, or "runs".
std::filesystem::path output_root();

/// Command-line entry point: 0 success, 1 runtime failure, 2 usage error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace ndd::harness
