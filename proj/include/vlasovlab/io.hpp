#pragma once

// CSV and JSON writers for trajectories, density fields, kinetic series and
// convergence tables. Numbers are written in shortest round-trip form so
// identical results give identical bytes.

#include "vlasovlab/errors.hpp"
#include "vlasovlab/kinetic.hpp"
#include "vlasovlab/kmc.hpp"
#include "vlasovlab/observables.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace vlasovlab {

inline std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Writes `text` to `path`, creating parent directories.
inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// Column-oriented table rendered as CSV or as a JSON array of records.
class Table {
public:
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(std::vector<double> row)
    {
        if (row.size() != columns_.size()) throw UsageError("Table: row width does not match header");
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

    std::string csv() const
    {
        std::string s;
        for (std::size_t c = 0; c < columns_.size(); ++c) s += (c ? "," : "") + columns_[c];
        s += '\n';
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) s += ',';
                s += format_number(row[c]);
            }
            s += '\n';
        }
        return s;
    }

    std::string json_text() const
    {
        // assembled by hand so numbers use the same shortest form as the CSV
        std::string s = "[\n";
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            s += "  {";
            for (std::size_t c = 0; c < columns_.size(); ++c) {
                s += (c ? ", \"" : "\"") + columns_[c] + "\": ";
                s += std::isfinite(rows_[r][c]) ? format_number(rows_[r][c]) : "null";
            }
            s += r + 1 < rows_.size() ? "},\n" : "}\n";
        }
        s += "]\n";
        return s;
    }

    /// Writes `stem` + ".csv" or ".json"; returns the path written.
    std::filesystem::path write(const std::filesystem::path& dir, const std::string& stem, bool as_json) const
    {
        const auto path = dir / (stem + (as_json ? ".json" : ".csv"));
        write_text_file(path, as_json ? json_text() : csv());
        return path;
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

inline Table trajectory_table(const Trajectory& traj)
{
    Table t({"t", "n_plus", "n_minus"});
    for (const Snapshot& s : traj.snapshots)
        t.add_row({s.time, static_cast<double>(s.n_plus), static_cast<double>(s.n_minus)});
    return t;
}

inline std::vector<std::string> field_columns(int dim)
{
    std::vector<std::string> cols{"t", "cell_index"};
    for (int a = 0; a < dim; ++a) cols.push_back("cell_center_" + std::to_string(a));
    cols.push_back("rho_plus");
    cols.push_back("rho_minus");
    return cols;
}

/// Appends one time slice of a gridded field pair to a field table.
inline void append_field(Table& table, double time, const GridSpec& grid, const std::vector<double>& plus,
                         const std::vector<double>& minus)
{
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        std::vector<double> row{time, static_cast<double>(i)};
        const auto c = grid.cell_center(i);
        for (int a = 0; a < grid.domain.dim(); ++a) row.push_back(c[a]);
        row.push_back(plus[i]);
        row.push_back(minus[i]);
        table.add_row(std::move(row));
    }
}

inline Table density_table(double time, const DensityField& f)
{
    Table t(field_columns(f.grid.domain.dim()));
    append_field(t, time, f.grid, f.plus, f.minus);
    return t;
}

inline Table kinetic_table(const std::vector<KineticState>& series)
{
    if (series.empty()) return Table(field_columns(1));
    Table t(field_columns(series.front().grid.domain.dim()));
    for (const KineticState& s : series) append_field(t, s.time, s.grid, s.plus, s.minus);
    return t;
}

inline nlohmann::json report_to_json(const ConditionReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const ConditionRow& row : r.rows)
        rows.push_back({{"label", row.label},
                        {"lhs", row.lhs},
                        {"relation", row.relation},
                        {"rhs", row.rhs},
                        {"pass", row.pass},
                        {"note", row.note}});
    return {{"model", r.theorem}, {"alpha", r.alpha}, {"beta", r.beta}, {"pass", r.pass}, {"rows", rows}};
}

}  // namespace vlasovlab
