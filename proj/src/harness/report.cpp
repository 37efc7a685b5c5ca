#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "ndd/error.hpp"
#include "ndd/harness/harness.hpp"

namespace ndd::harness {

namespace fs = std::filesystem;

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw DataError("no column '" + std::string(name) + "'");
}

std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

Table read_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || *end != '\0')
                throw DataError(path.string() + ":" + std::to_string(lineno) + ": not a number '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != t.header.size())
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_table(const fs::path& path, const Table& t) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_value(row[i]);
        out << '\n';
    }
}

Table summarize(const std::vector<Table>& seeds) {
    if (seeds.empty()) throw DataError("nothing to summarize");
    const Table& first = seeds.front();
    if (first.header.empty()) throw DataError("table without columns");
    for (const auto& t : seeds) {
        if (t.header != first.header) throw DataError("metric tables have different columns");
        if (t.rows.size() != first.rows.size()) throw DataError("metric tables have different lengths");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            if (t.rows[r][0] != first.rows[r][0]) throw DataError("metric tables disagree on " + first.header[0]);
    }
    Table s;
    s.header = {first.header[0], "seeds"};
    for (std::size_t c = 1; c < first.header.size(); ++c) {
        s.header.push_back(first.header[c] + "_mean");
        s.header.push_back(first.header[c] + "_std");
    }
    const auto n = static_cast<double>(seeds.size());
    for (std::size_t r = 0; r < first.rows.size(); ++r) {
        std::vector<double> row = {first.rows[r][0], n};
        for (std::size_t c = 1; c < first.header.size(); ++c) {
            double sum = 0.0;
            for (const auto& t : seeds) sum += t.rows[r][c];
            const double mean = sum / n;
            double ss = 0.0;
            for (const auto& t : seeds) ss += (t.rows[r][c] - mean) * (t.rows[r][c] - mean);
            row.push_back(mean);
            row.push_back(seeds.size() > 1 ? std::sqrt(ss / (n - 1.0)) : (std::isnan(mean) ? mean : 0.0));
        }
        s.rows.push_back(std::move(row));
    }
    return s;
}

std::vector<fs::path> find_metrics(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
    std::vector<fs::path> found;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() == "metrics.csv") found.push_back(e.path());
    std::sort(found.begin(), found.end());
    return found;
}

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::vector<Series>& series) {
    constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.mean[i]) || !std::isfinite(s.x[i])) continue;
            const double h = s.spread.empty() || !std::isfinite(s.spread[i]) ? 0.0 : s.spread[i];
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.mean[i] - h);
            y1 = std::max(y1, s.mean[i] + h);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ostringstream o;
    o.precision(6);
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << escape(title) << "</text>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label) << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = y0 + (y1 - y0) * k / 4.0, xv = x0 + (x1 - x0) * k / 4.0;
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << format_value(yv) << "</text>\n"
          << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 14
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << format_value(xv) << "</text>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % 5];
        std::ostringstream line, upper, lower;
        line.precision(6);
        upper.precision(6);
        lower.precision(6);
        std::vector<std::size_t> ok;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.x[i]) && std::isfinite(s.mean[i])) ok.push_back(i);
        if (ok.empty()) continue;
        if (!s.spread.empty()) {
            o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (auto i : ok) o << px(s.x[i]) << ',' << py(s.mean[i] + s.spread[i]) << ' ';
            for (auto it = ok.rbegin(); it != ok.rend(); ++it) o << px(s.x[*it]) << ',' << py(s.mean[*it] - s.spread[*it]) << ' ';
            o << "\"/>\n";
        }
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (auto i : ok) o << px(s.x[i]) << ',' << py(s.mean[i]) << ' ';
        o << "\"/>\n"
          << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (k + 1)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">"
          << escape(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::vector<fs::path> report(const fs::path& dir, const fs::path& out) {
    const auto files = find_metrics(dir);
    if (files.empty()) throw DataError("no metrics.csv under " + dir.string());
    std::vector<Table> seeds;
    for (const auto& f : files) seeds.push_back(read_table(f));
    const Table s = summarize(seeds);
    fs::create_directories(out);
    std::vector<fs::path> written{out / "summary.csv"};
    write_table(written.front(), s);

    const Table& first = seeds.front();
    std::vector<double> x;
    for (const auto& r : s.rows) x.push_back(r[0]);
    for (std::size_t c = 1; c < first.header.size(); ++c) {
        Series ser{first.header[c] + " (n=" + std::to_string(seeds.size()) + ")", x, {}, {}};
        const std::size_t mc = 2 * c, sc = 2 * c + 1;
        for (const auto& r : s.rows) {
            ser.mean.push_back(r[mc]);
            ser.spread.push_back(r[sc]);
        }
        const fs::path svg = out / (first.header[c] + ".svg");
        std::ofstream f(svg, std::ios::binary);
        f << line_plot_svg(first.header[c] + ": mean +- std over seeds", first.header[0], {ser});
        written.push_back(svg);
    }
    return written;
}

std::string config_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

fs::path output_root() {
    const char* env = std::getenv("NDD_OUTPUT_ROOT");
    return env && *env ? fs::path(env) : fs::path("runs");
}

}  // namespace ndd::harness
