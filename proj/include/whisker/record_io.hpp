#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "whisker/sensor_model.hpp"

namespace whisker::io {

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Record CSV: `#` comment header lines with key=value metadata
// (schema_version, sample_rate_hz, seed, L_mm, T_mm, f_hz, gain, trial,
// units, scenario), then `t_s,ch1_V,ch2_V,ch3_V,ch4_V` (ch*_ohm for
// resistance-domain records) and one row per sample. Numbers are written in
// shortest round-trip form, UTF-8, LF endings, so serialize -> ingest is
// bit-identical.
void write_record_csv(const TimeSeriesRecord& rec, const std::filesystem::path& path);

// Validated load of the schema above. Column-count mismatches, non-monotone
// time, and non-finite samples raise IngestError naming the offending line.
TimeSeriesRecord ingest(const std::filesystem::path& path);

// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double v);

}  // namespace whisker::io
