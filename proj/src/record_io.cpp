#include "whisker/record_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace whisker::io {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view text, const std::filesystem::path& path, std::size_t line) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        std::ostringstream os;
        os << path.string() << ":" << line << ": malformed number '" << text << "'";
        throw IngestError(os.str());
    }
    return v;
}

std::vector<std::string_view> split_csv(std::string_view row) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = row.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(row.substr(start));
            break;
        }
        out.push_back(row.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

}  // namespace

void write_record_csv(const TimeSeriesRecord& rec, const std::filesystem::path& path) {
    rec.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot open for writing: " + path.string());

    const std::string unit = rec.meta.units == "ohm" ? "ohm" : "V";
    out << "# schema_version=1\n";
    out << "# scenario=" << rec.meta.scenario << "\n";
    out << "# sample_rate_hz=" << format_double(rec.sample_rate_hz) << "\n";
    out << "# seed=" << rec.meta.seed << "\n";
    out << "# L_mm=" << format_double(rec.meta.l_mm) << "\n";
    out << "# T_mm=" << format_double(rec.meta.t_mm) << "\n";
    out << "# f_hz=" << format_double(rec.meta.f_hz) << "\n";
    out << "# gain=" << format_double(rec.meta.gain) << "\n";
    out << "# trial=" << rec.meta.trial << "\n";
    out << "# units=" << unit << "\n";
    out << "t_s,ch1_" << unit << ",ch2_" << unit << ",ch3_" << unit << ",ch4_" << unit << "\n";

    std::string line;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        line.clear();
        line += format_double(static_cast<double>(i) / rec.sample_rate_hz);
        for (int ch = 0; ch < 4; ++ch) {
            line += ',';
            line += format_double(rec.channels[static_cast<std::size_t>(ch)][i]);
        }
        line += '\n';
        out << line;
    }
}

TimeSeriesRecord ingest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open: " + path.string());

    TimeSeriesRecord rec;
    bool have_rate = false;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    double last_t = 0.0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        if (line[0] == '#') {
            std::string_view body(line);
            body.remove_prefix(1);
            while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            const std::size_t eq = body.find('=');
            if (eq == std::string_view::npos) continue;
            const std::string key(body.substr(0, eq));
            const std::string value(body.substr(eq + 1));
            if (key == "sample_rate_hz") {
                rec.sample_rate_hz = parse_double(value, path, line_no);
                have_rate = true;
            } else if (key == "seed") {
                rec.meta.seed = std::strtoull(value.c_str(), nullptr, 10);
            } else if (key == "L_mm") {
                rec.meta.l_mm = parse_double(value, path, line_no);
            } else if (key == "T_mm") {
                rec.meta.t_mm = parse_double(value, path, line_no);
            } else if (key == "f_hz") {
                rec.meta.f_hz = parse_double(value, path, line_no);
            } else if (key == "gain") {
                rec.meta.gain = parse_double(value, path, line_no);
            } else if (key == "trial") {
                rec.meta.trial = static_cast<int>(std::strtol(value.c_str(), nullptr, 10));
            } else if (key == "units") {
                rec.meta.units = value;
            } else if (key == "scenario") {
                rec.meta.scenario = value;
            }
            // Unrecognized metadata keys are permitted for external logs.
            continue;
        }

        if (!header_seen) {
            const auto cols = split_csv(line);
            if (cols.size() != 5) {
                std::ostringstream os;
                os << path.string() << ":" << line_no << ": expected 5 columns (t + 4 channels), got "
                   << cols.size();
                throw IngestError(os.str());
            }
            if (cols[0] != "t_s") {
                std::ostringstream os;
                os << path.string() << ":" << line_no << ": first column must be t_s";
                throw IngestError(os.str());
            }
            if (cols[1].ends_with("_ohm")) rec.meta.units = "ohm";
            header_seen = true;
            continue;
        }

        const auto cols = split_csv(line);
        if (cols.size() != 5) {
            std::ostringstream os;
            os << path.string() << ":" << line_no << ": expected 5 columns, got " << cols.size();
            throw IngestError(os.str());
        }
        const double t = parse_double(cols[0], path, line_no);
        if (rec.size() > 0 && !(t > last_t)) {
            std::ostringstream os;
            os << path.string() << ":" << line_no << ": non-monotone time " << t;
            throw IngestError(os.str());
        }
        last_t = t;
        for (int ch = 0; ch < 4; ++ch) {
            const double v = parse_double(cols[static_cast<std::size_t>(ch) + 1], path, line_no);
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << path.string() << ":" << line_no << ": non-finite sample in channel "
                   << ch + 1;
                throw IngestError(os.str());
            }
            rec.channels[static_cast<std::size_t>(ch)].push_back(v);
        }
    }

    if (!header_seen) throw IngestError(path.string() + ": missing column header row");
    if (!have_rate) throw IngestError(path.string() + ": missing sample_rate_hz metadata");
    if (rec.size() == 0) throw IngestError(path.string() + ": no samples");
    rec.validate();
    return rec;
}

}  // namespace whisker::io
