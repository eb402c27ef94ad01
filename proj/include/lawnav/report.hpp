#ifndef LAWNAV_REPORT_HPP
#define LAWNAV_REPORT_HPP

#include "episode.hpp"
#include "metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace lawnav
{

enum class ReportFormat : std::uint8_t
{
    Json,
    Csv,
    Markdown,
};

inline std::string fixed4(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    std::string s(buf);
    if (s == "-0.0000") s = "0.0000";
    return s;
}

inline const std::vector<std::string>& report_columns()
{
    static const std::vector<std::string> cols{"episode_id", "split", "divergence", "tl", "ne", "sr",
                                               "os", "spl", "ndtw", "sdtw", "wa_05", "wa_10"};
    return cols;
}

inline std::vector<double> report_values(const MetricsReport& r)
{
    return {r.divergence, r.tl, r.ne, r.sr, r.os, r.spl, r.ndtw, r.sdtw, r.wa_05, r.wa_10};
}

/// Per-episode metrics as CSV, JSON (array of objects) or a markdown table. Values carry
/// 4 decimals in every format.
inline void write_report(std::ostream& out, std::span<const MetricsReport> reports, ReportFormat format)
{
    const auto& cols = report_columns();
    switch (format) {
    case ReportFormat::Csv: {
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << '\n';
        for (const auto& r : reports) {
            out << r.episode_id << ',' << r.split;
            for (double v : report_values(r)) out << ',' << fixed4(v);
            out << '\n';
        }
        break;
    }
    case ReportFormat::Json: {
        out << '[';
        for (std::size_t k = 0; k < reports.size(); ++k) {
            const auto& r = reports[k];
            out << (k ? ",\n " : "\n ") << "{\"episode_id\":" << nlohmann::json(r.episode_id).dump()
                << ",\"split\":" << nlohmann::json(r.split).dump();
            const auto vals = report_values(r);
            for (std::size_t i = 0; i < vals.size(); ++i) out << ",\"" << cols[i + 2] << "\":" << fixed4(vals[i]);
            out << '}';
        }
        out << (reports.empty() ? "]\n" : "\n]\n");
        break;
    }
    case ReportFormat::Markdown: {
        out << '|';
        for (const auto& c : cols) out << ' ' << c << " |";
        out << "\n|";
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i < 2 ? "---|" : "---:|");
        out << '\n';
        for (const auto& r : reports) {
            out << "| " << r.episode_id << " | " << r.split << " |";
            for (double v : report_values(r)) out << ' ' << fixed4(v) << " |";
            out << '\n';
        }
        break;
    }
    }
}

/// Split means in the layout of the paper's results table (SR, SPL, nDTW, sDTW, WA).
inline void write_summary_table(std::ostream& out, const std::map<std::string, MetricsReport>& split_means,
                                const std::string& label = "policy")
{
    out << "| Model | Split | SR | SPL | nDTW | sDTW | WA |\n";
    out << "|---|---|---:|---:|---:|---:|---:|\n";
    for (const auto& [split, m] : split_means)
        out << "| " << label << " | " << split << " | " << fixed4(m.sr) << " | " << fixed4(m.spl) << " | " << fixed4(m.ndtw)
            << " | " << fixed4(m.sdtw) << " | " << fixed4(m.wa_05) << " |\n";
}

inline void write_bins_csv(std::ostream& out, const BinTable& table)
{
    out << "bin_lo,bin_hi,n,ndtw_mean,ndtw_ci,wa_mean,wa_ci\n";
    for (const auto& b : table.bins)
        out << fixed4(b.lo) << ',' << fixed4(b.hi) << ',' << b.n << ',' << fixed4(b.ndtw_mean) << ','
            << fixed4(b.ndtw_ci) << ',' << fixed4(b.wa_mean) << ',' << fixed4(b.wa_ci) << '\n';
}

// sub-instructions -------------------------------------------------------------

/// A sub-instruction counts as followed when the end waypoint of its span (or, in
/// all_waypoints mode, every waypoint of the span) is visited within tau.
inline std::vector<bool> sub_instruction_visits(const GridMap& map, const Episode& ep, std::span<const Point> trajectory,
                                                double tau, bool all_waypoints = false)
{
    std::vector<bool> hit(ep.pano.size(), false);
    for (std::size_t j = 0; j < ep.pano.size(); ++j) {
        WaypointPath one{{ep.pano[j]}, PathKind::pano()};
        hit[j] = waypoint_accuracy(trajectory, one, tau, map) > 0.0;
    }
    std::vector<bool> out;
    for (const auto& s : ep.sub_instructions) {
        bool ok = hit[s.pano_to];
        if (all_waypoints)
            for (std::size_t j = s.pano_from; j <= s.pano_to; ++j) ok = ok && hit[j];
        out.push_back(ok);
    }
    return out;
}

/// One line per sub-instruction: episode, index, tokens, pano span, visited flag.
inline void write_sub_instruction_header(std::ostream& out)
{
    out << "episode_id,sub_index,tokens,pano_from,pano_to,correct\n";
}

inline void write_sub_instruction_rows(std::ostream& out, const Episode& ep, const std::vector<bool>& correct)
{
    for (std::size_t i = 0; i < ep.sub_instructions.size(); ++i) {
        const auto& s = ep.sub_instructions[i];
        std::string toks;
        for (std::size_t t = s.token_begin; t < s.token_end; ++t) toks += (t > s.token_begin ? " " : "") + ep.instruction[t].str();
        out << ep.id << ',' << i << ',' << toks << ',' << s.pano_from << ',' << s.pano_to << ','
            << (correct[i] ? 1 : 0) << '\n';
    }
}

} // namespace lawnav

#endif // LAWNAV_REPORT_HPP
