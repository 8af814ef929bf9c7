#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "iafc/ensemble.hpp"
#include "iafc/error.hpp"
#include "iafc/spectral.hpp"

// Comma-separated tables with '#'-prefixed "key: value" metadata lines
// followed by one header row.
namespace iafc::csv {

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct Table {
    Metadata metadata;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ValidationError("CSV has no column '" + name + "'");
    }
};

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out)
    {
        out_.precision(std::numeric_limits<double>::max_digits10);
    }

    Writer& meta(const Metadata& m)
    {
        for (const auto& [k, v] : m) out_ << "# " << k << ": " << v << '\n';
        return *this;
    }
    Writer& header(const std::vector<std::string>& cols)
    {
        for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
        out_ << '\n';
        return *this;
    }
    Writer& row(std::initializer_list<double> values)
    {
        bool first = true;
        for (double v : values) {
            out_ << (first ? "" : ",") << v;
            first = false;
        }
        out_ << '\n';
        return *this;
    }
    Writer& row(const std::vector<double>& values)
    {
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
        out_ << '\n';
        return *this;
    }

private:
    std::ostream& out_;
};

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline Table read(std::istream& in)
{
    Table t;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto body = trim(line.substr(1));
            if (const auto colon = body.find(':'); colon != std::string::npos)
                t.metadata.emplace_back(trim(body.substr(0, colon)), trim(body.substr(colon + 1)));
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw ValidationError("CSV line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(t.header.size()) + " fields");
        std::vector<double> row;
        for (const auto& c : cells) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != c.size() || c.empty())
                throw ValidationError("CSV line " + std::to_string(line_no) + ": '" + c + "' is not a number");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ValidationError("CSV has no header row");
    return t;
}

inline Table read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read(in);
}

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    return out;
}

/// Columns t, re, im, intensity.
inline void write_trace(std::ostream& out, const TimeField& f, const Metadata& meta)
{
    Writer w(out);
    w.meta(meta).meta({{"n_points", std::to_string(f.grid.n_points)},
                       {"d_omega", detail::num(f.grid.d_omega)},
                       {"dt", detail::num(f.grid.time_step())}});
    w.header({"t", "re", "im", "intensity"});
    for (std::size_t k = 0; k < f.amplitudes.size(); ++k)
        w.row({f.time(k), f.amplitudes[k].real(), f.amplitudes[k].imag(), std::norm(f.amplitudes[k])});
}

/// Columns omega, re, im, intensity.
inline void write_spectrum(std::ostream& out, const SpectralField& f, const Metadata& meta)
{
    Writer w(out);
    w.meta(meta).meta({{"n_points", std::to_string(f.grid.n_points)},
                       {"d_omega", detail::num(f.grid.d_omega)}});
    w.header({"omega", "re", "im", "intensity"});
    for (std::size_t j = 0; j < f.amplitudes.size(); ++j)
        w.row({f.grid.omega(j), f.amplitudes[j].real(), f.amplitudes[j].imag(), std::norm(f.amplitudes[j])});
}

/// Columns t, intensity (an incoherent sum carries no phase).
inline void write_intensity(std::ostream& out, const IntensityTrace& tr, const Metadata& meta)
{
    Writer w(out);
    w.meta(meta).meta({{"n_points", std::to_string(tr.grid.n_points)},
                       {"d_omega", detail::num(tr.grid.d_omega)},
                       {"dt", detail::num(tr.grid.time_step())}});
    w.header({"t", "intensity"});
    for (std::size_t k = 0; k < tr.values.size(); ++k) w.row({tr.time(k), tr.values[k]});
}

/// Columns abscissa, mean_eta, std_error.
inline void write_curve(std::ostream& out, const EfficiencyCurve& c, const Metadata& meta)
{
    c.validate();
    Writer w(out);
    w.meta(meta).meta(c.metadata);
    w.header({"abscissa", "mean_eta", "std_error"});
    for (std::size_t i = 0; i < c.abscissa.size(); ++i) w.row({c.abscissa[i], c.ordinate[i], c.errors[i]});
}

} // namespace iafc::csv
