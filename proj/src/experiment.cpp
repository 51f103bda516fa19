#include "whisker/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include "whisker/calibration.hpp"
#include "whisker/record_io.hpp"
#include "whisker/rng.hpp"

namespace whisker::experiment {

using nlohmann::json;

std::string to_string(Kind kind) {
    switch (kind) {
        case Kind::static_sweep: return "static_sweep";
        case Kind::fatigue: return "fatigue";
        case Kind::freq_sweep: return "freq_sweep";
        case Kind::longitudinal_sweep: return "longitudinal_sweep";
        case Kind::transverse_sweep: return "transverse_sweep";
        case Kind::localize: return "localize";
        case Kind::fit_defaults: return "fit_defaults";
    }
    return "unknown";
}

Kind kind_from_string(const std::string& name) {
    for (Kind k : {Kind::static_sweep, Kind::fatigue, Kind::freq_sweep, Kind::longitudinal_sweep,
                   Kind::transverse_sweep, Kind::localize, Kind::fit_defaults})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown experiment kind '" + name + "'");
}

Eigen::Vector3d drive_axis_from_name(const std::string& name) {
    if (name == "longitudinal") return {1.0, 0.0, 0.0};
    if (name == "transverse") return {0.0, 1.0, 0.0};
    if (name == "diagonal") return Eigen::Vector3d(1.0, 1.0, 0.0).normalized();
    throw ConfigError("unknown drive axis '" + name + "' (longitudinal|transverse|diagonal)");
}

// ---------------------------------------------------------------------------
// strict JSON helpers

namespace {

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    const json* take(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) return nullptr;
        return &j_.at(key);
    }

    void number(const char* key, double& out) {
        if (const json* v = take(key)) {
            if (!v->is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
            out = v->get<double>();
        }
    }
    void integer(const char* key, int& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer()) throw ConfigError(path_ + "." + key + ": expected an integer");
            out = v->get<int>();
        }
    }
    void unsigned64(const char* key, std::uint64_t& out, bool* present = nullptr) {
        if (const json* v = take(key)) {
            if (!v->is_number_unsigned() && !v->is_number_integer())
                throw ConfigError(path_ + "." + key + ": expected an unsigned integer");
            out = v->get<std::uint64_t>();
            if (present) *present = true;
        }
    }
    void boolean(const char* key, bool& out) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) throw ConfigError(path_ + "." + key + ": expected a bool");
            out = v->get<bool>();
        }
    }
    void text(const char* key, std::string& out) {
        if (const json* v = take(key)) {
            if (!v->is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
            out = v->get<std::string>();
        }
    }
    void number_list(const char* key, std::vector<double>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) throw ConfigError(path_ + "." + key + ": expected an array");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number()) throw ConfigError(path_ + "." + key + ": expected numbers");
                out.push_back(e.get<double>());
            }
        }
    }
    void number_array4(const char* key, std::array<double, 4>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array() || v->size() != 4)
                throw ConfigError(path_ + "." + key + ": expected an array of 4 numbers");
            for (std::size_t i = 0; i < 4; ++i) out[i] = v->at(i).get<double>();
        }
    }
    void matrix4x2(const char* key, Eigen::Matrix<double, 4, 2>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array() || v->size() != 4)
                throw ConfigError(path_ + "." + key + ": expected 4 rows of [e1, e2] slopes");
            for (std::size_t r = 0; r < 4; ++r) {
                const auto& row = v->at(r);
                if (!row.is_array() || row.size() != 2)
                    throw ConfigError(path_ + "." + key + ": each row needs exactly 2 entries");
                out(static_cast<Eigen::Index>(r), 0) = row.at(0).get<double>();
                out(static_cast<Eigen::Index>(r), 1) = row.at(1).get<double>();
            }
        }
    }

    const json* object(const char* key) { return take(key); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.contains(it.key()))
                throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string iso_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// config

ScenarioConfig ScenarioConfig::defaults_for(Kind kind) {
    ScenarioConfig cfg;
    cfg.kind = kind;
    if (kind == Kind::static_sweep || kind == Kind::fatigue)
        cfg.readout = defaults::static_chain();
    return cfg;
}

ScenarioConfig parse_config(const json& j) {
    ObjectReader top(j, "config");
    ScenarioConfig cfg;

    int schema = 1;
    top.integer("schema_version", schema);
    if (schema != 1) throw ConfigError("config.schema_version: only version 1 is supported");

    std::string kind_name;
    top.text("kind", kind_name);
    if (kind_name.empty()) throw ConfigError("config.kind: required");
    cfg = ScenarioConfig::defaults_for(kind_from_string(kind_name));

    top.unsigned64("seed", cfg.seed, &cfg.seed_set);
    top.integer("trials", cfg.trials);
    if (cfg.trials < 1) throw ConfigError("config.trials: must be >= 1");

    if (const json* b = top.object("source")) {
        ObjectReader r(*b, "config.source");
        r.number("sphere_radius_m", cfg.source.sphere_radius);
        r.number("velocity_amplitude_mps", cfg.source.velocity_amplitude);
        r.number("frequency_hz", cfg.source.frequency_hz);
        r.number("phase_rad", cfg.source.phase_rad);
        r.finish();
    }
    if (const json* b = top.object("geometry")) {
        ObjectReader r(*b, "config.geometry");
        double l_mm = cfg.geometry.l_m * 1e3, t_mm = cfg.geometry.t_m * 1e3;
        double yaw_deg = cfg.geometry.mount_yaw_rad * 180.0 / std::numbers::pi;
        r.number("l_mm", l_mm);
        r.number("t_mm", t_mm);
        r.number("mount_yaw_deg", yaw_deg);
        r.number("whisker_length_m", cfg.geometry.whisker.length_m);
        r.number("whisker_diameter_m", cfg.geometry.whisker.diameter_m);
        r.number("sensing_point_offset_m", cfg.geometry.whisker.sensing_point_offset_m);
        r.finish();
        cfg.geometry.l_m = l_mm * 1e-3;
        cfg.geometry.t_m = t_mm * 1e-3;
        cfg.geometry.mount_yaw_rad = yaw_deg * std::numbers::pi / 180.0;
    }
    if (const json* b = top.object("calibration")) {
        ObjectReader r(*b, "config.calibration");
        r.number("baseline_ohm", cfg.cal.baseline_ohm);
        r.number("noise_std_ohm", cfg.cal.noise_std_ohm);
        r.matrix4x2("sensitivity_ohm_per_n", cfg.cal.sensitivity_ohm_per_n);
        r.finish();
    }
    if (const json* b = top.object("readout")) {
        ObjectReader r(*b, "config.readout");
        r.number("excitation_v", cfg.readout.excitation_v);
        r.number("amplifier_gain", cfg.readout.amplifier_gain);
        r.number("sample_rate_hz", cfg.readout.sample_rate_hz);
        r.number("adc_saturation_v", cfg.readout.adc_saturation_v);
        r.finish();
    }
    if (const json* b = top.object("drag")) {
        ObjectReader r(*b, "config.drag");
        r.number("linear_gain_n_per_mps", cfg.drag.linear_gain_n_per_mps);
        r.finish();
    }
    if (const json* b = top.object("dsp")) {
        ObjectReader r(*b, "config.dsp");
        r.number("analysis_rate_hz", cfg.dsp.analysis_rate_hz);
        r.number("window_s", cfg.dsp.window_s);
        r.number("hop_s", cfg.dsp.hop_s);
        r.text("window", cfg.dsp.window);
        r.number("peak_halfwidth_hz", cfg.dsp.peak_halfwidth_hz);
        r.finish();
        if (cfg.dsp.window != "hann" && cfg.dsp.window != "rectangular")
            throw ConfigError("config.dsp.window: expected hann or rectangular");
    }
    if (const json* b = top.object("localization")) {
        ObjectReader r(*b, "config.localization");
        r.number_array4("gain_v_per_mps", cfg.forward.gain_v_per_mps);
        r.number_array4("noise_floor_v", cfg.forward.noise_floor_v);
        r.number("decay_exponent", cfg.forward.decay_exponent);
        r.number("sphere_radius_m", cfg.forward.sphere_radius_m);
        r.number("velocity_amplitude_mps", cfg.forward.velocity_amplitude_mps);
        r.finish();
    }
    if (const json* b = top.object("static_sweep")) {
        ObjectReader r(*b, "config.static_sweep");
        r.number("max_force_n", cfg.static_sweep.max_force_n);
        r.integer("steps", cfg.static_sweep.steps);
        r.finish();
        if (cfg.static_sweep.steps < 2) throw ConfigError("config.static_sweep.steps: must be >= 2");
    }
    if (const json* b = top.object("fatigue")) {
        ObjectReader r(*b, "config.fatigue");
        r.unsigned64("cycles", cfg.fatigue.cycles);
        r.number("stroke_freq_hz", cfg.fatigue.stroke_freq_hz);
        r.number("sample_rate_hz", cfg.fatigue.sample_rate_hz);
        r.number("load_amplitude_n", cfg.fatigue.load_amplitude_n);
        r.number_array4("drift_ppm_per_cycle", cfg.fatigue.drift_ppm_per_cycle);
        r.boolean("emit_record", cfg.fatigue.emit_record);
        r.finish();
    }
    if (const json* b = top.object("freq_sweep")) {
        ObjectReader r(*b, "config.freq_sweep");
        r.number("lo_hz", cfg.freq_sweep.lo_hz);
        r.number("hi_hz", cfg.freq_sweep.hi_hz);
        r.number("step_hz", cfg.freq_sweep.step_hz);
        r.number("offset_span_hz", cfg.freq_sweep.offset_span_hz);
        r.number("duration_s", cfg.freq_sweep.duration_s);
        r.text("drive", cfg.freq_sweep.drive);
        r.finish();
    }
    if (const json* b = top.object("longitudinal_sweep")) {
        ObjectReader r(*b, "config.longitudinal_sweep");
        r.number_list("l_mm", cfg.longitudinal_sweep.l_mm);
        r.number("f_hz", cfg.longitudinal_sweep.f_hz);
        r.number("duration_s", cfg.longitudinal_sweep.duration_s);
        r.finish();
    }
    if (const json* b = top.object("transverse_sweep")) {
        ObjectReader r(*b, "config.transverse_sweep");
        r.number_list("t_mm", cfg.transverse_sweep.t_mm);
        r.number("l_mm", cfg.transverse_sweep.l_mm);
        r.number("f_hz", cfg.transverse_sweep.f_hz);
        r.number("duration_s", cfg.transverse_sweep.duration_s);
        r.finish();
    }
    if (const json* b = top.object("localize")) {
        ObjectReader r(*b, "config.localize");
        r.text("record", cfg.loc.record);
        if (b->contains("amplitudes_v")) cfg.loc.has_amplitudes = true;
        r.number_array4("amplitudes_v", cfg.loc.amplitudes_v);
        r.number("frequency_hz", cfg.loc.frequency_hz);
        r.text("hypotheses", cfg.loc.hypotheses);
        r.finish();
    }
    if (const json* b = top.object("fit_defaults")) {
        ObjectReader r(*b, "config.fit_defaults");
        r.number("a4_v", cfg.fit.a4_v);
        r.number("a1_v", cfg.fit.a1_v);
        r.number("anchor_l_mm", cfg.fit.anchor_l_mm);
        r.number("range_mm", cfg.fit.range_mm);
        r.finish();
    }
    top.finish();

    const bool simulated = cfg.kind != Kind::localize && cfg.kind != Kind::fit_defaults;
    if (simulated && !cfg.seed_set)
        throw ConfigError("config.seed: required for simulated runs");

    cfg.cal.validate();
    cfg.readout.validate();
    cfg.drag.validate();
    cfg.geometry.whisker.validate();
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

json config_to_json(const ScenarioConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["kind"] = to_string(cfg.kind);
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    j["source"] = {{"sphere_radius_m", cfg.source.sphere_radius},
                   {"velocity_amplitude_mps", cfg.source.velocity_amplitude},
                   {"frequency_hz", cfg.source.frequency_hz},
                   {"phase_rad", cfg.source.phase_rad}};
    j["geometry"] = {{"l_mm", cfg.geometry.l_m * 1e3},
                     {"t_mm", cfg.geometry.t_m * 1e3},
                     {"mount_yaw_deg", cfg.geometry.mount_yaw_rad * 180.0 / std::numbers::pi},
                     {"whisker_length_m", cfg.geometry.whisker.length_m},
                     {"whisker_diameter_m", cfg.geometry.whisker.diameter_m},
                     {"sensing_point_offset_m", cfg.geometry.whisker.sensing_point_offset_m}};
    json k_rows = json::array();
    for (int r = 0; r < 4; ++r)
        k_rows.push_back({cfg.cal.sensitivity_ohm_per_n(r, 0), cfg.cal.sensitivity_ohm_per_n(r, 1)});
    j["calibration"] = {{"baseline_ohm", cfg.cal.baseline_ohm},
                        {"noise_std_ohm", cfg.cal.noise_std_ohm},
                        {"sensitivity_ohm_per_n", k_rows}};
    j["readout"] = {{"excitation_v", cfg.readout.excitation_v},
                    {"amplifier_gain", cfg.readout.amplifier_gain},
                    {"sample_rate_hz", cfg.readout.sample_rate_hz},
                    {"adc_saturation_v", cfg.readout.adc_saturation_v}};
    j["drag"] = {{"linear_gain_n_per_mps", cfg.drag.linear_gain_n_per_mps}};
    j["dsp"] = {{"analysis_rate_hz", cfg.dsp.analysis_rate_hz},
                {"window_s", cfg.dsp.window_s},
                {"hop_s", cfg.dsp.hop_s},
                {"window", cfg.dsp.window},
                {"peak_halfwidth_hz", cfg.dsp.peak_halfwidth_hz}};
    j["localization"] = {{"gain_v_per_mps", cfg.forward.gain_v_per_mps},
                         {"noise_floor_v", cfg.forward.noise_floor_v},
                         {"decay_exponent", cfg.forward.decay_exponent},
                         {"sphere_radius_m", cfg.forward.sphere_radius_m},
                         {"velocity_amplitude_mps", cfg.forward.velocity_amplitude_mps}};
    switch (cfg.kind) {
        case Kind::static_sweep:
            j["static_sweep"] = {{"max_force_n", cfg.static_sweep.max_force_n},
                                 {"steps", cfg.static_sweep.steps}};
            break;
        case Kind::fatigue:
            j["fatigue"] = {{"cycles", cfg.fatigue.cycles},
                            {"stroke_freq_hz", cfg.fatigue.stroke_freq_hz},
                            {"sample_rate_hz", cfg.fatigue.sample_rate_hz},
                            {"load_amplitude_n", cfg.fatigue.load_amplitude_n},
                            {"drift_ppm_per_cycle", cfg.fatigue.drift_ppm_per_cycle},
                            {"emit_record", cfg.fatigue.emit_record}};
            break;
        case Kind::freq_sweep:
            j["freq_sweep"] = {{"lo_hz", cfg.freq_sweep.lo_hz},
                               {"hi_hz", cfg.freq_sweep.hi_hz},
                               {"step_hz", cfg.freq_sweep.step_hz},
                               {"offset_span_hz", cfg.freq_sweep.offset_span_hz},
                               {"duration_s", cfg.freq_sweep.duration_s},
                               {"drive", cfg.freq_sweep.drive}};
            break;
        case Kind::longitudinal_sweep:
            j["longitudinal_sweep"] = {{"l_mm", cfg.longitudinal_sweep.l_mm},
                                       {"f_hz", cfg.longitudinal_sweep.f_hz},
                                       {"duration_s", cfg.longitudinal_sweep.duration_s}};
            break;
        case Kind::transverse_sweep:
            j["transverse_sweep"] = {{"t_mm", cfg.transverse_sweep.t_mm},
                                     {"l_mm", cfg.transverse_sweep.l_mm},
                                     {"f_hz", cfg.transverse_sweep.f_hz},
                                     {"duration_s", cfg.transverse_sweep.duration_s}};
            break;
        case Kind::localize:
            j["localize"] = {{"record", cfg.loc.record},
                             {"frequency_hz", cfg.loc.frequency_hz},
                             {"hypotheses", cfg.loc.hypotheses}};
            if (cfg.loc.has_amplitudes) j["localize"]["amplitudes_v"] = cfg.loc.amplitudes_v;
            break;
        case Kind::fit_defaults:
            j["fit_defaults"] = {{"a4_v", cfg.fit.a4_v},
                                 {"a1_v", cfg.fit.a1_v},
                                 {"anchor_l_mm", cfg.fit.anchor_l_mm},
                                 {"range_mm", cfg.fit.range_mm}};
            break;
    }
    return j;
}

std::string config_digest(const ScenarioConfig& cfg) {
    const std::string canonical = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// report

bool ExperimentReport::all_required_pass() const {
    for (const auto& m : metrics)
        if (!m.informational && !m.pass) return false;
    return true;
}

const MetricResult* ExperimentReport::find(const std::string& name) const {
    for (const auto& m : metrics)
        if (m.name == name) return &m;
    return nullptr;
}

json ExperimentReport::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["config_digest"] = config_digest;
    j["timestamp"] = timestamp;
    j["metrics"] = json::array();
    for (const auto& m : metrics)
        j["metrics"].push_back({{"name", m.name},
                                {"value", m.value},
                                {"target", m.target},
                                {"tolerance", m.tolerance},
                                {"pass", m.pass},
                                {"informational", m.informational}});
    j["artifacts"] = artifacts;
    return j;
}

ExperimentReport report_from_json(const json& j) {
    ExperimentReport rep;
    rep.schema_version = j.at("schema_version").get<int>();
    rep.config_digest = j.at("config_digest").get<std::string>();
    rep.timestamp = j.value("timestamp", "");
    for (const auto& m : j.at("metrics")) {
        MetricResult r;
        r.name = m.at("name").get<std::string>();
        r.value = m.at("value").get<double>();
        r.target = m.at("target").get<double>();
        r.tolerance = m.at("tolerance").get<double>();
        r.pass = m.at("pass").get<bool>();
        r.informational = m.at("informational").get<bool>();
        rep.metrics.push_back(std::move(r));
    }
    for (const auto& a : j.at("artifacts")) rep.artifacts.push_back(a.get<std::string>());
    return rep;
}

std::vector<std::string> compare_to_targets(ExperimentReport& report) {
    std::vector<std::string> failures;
    for (auto& m : report.metrics) {
        m.pass = m.informational || std::abs(m.value - m.target) <= m.tolerance;
        if (!m.pass) failures.push_back(m.name);
    }
    return failures;
}

// ---------------------------------------------------------------------------
// shared analysis

TrialAnalysis analyze_record(const TimeSeriesRecord& rec, const DspConfig& dsp_cfg,
                             std::optional<double> f_target_hz) {
    const TimeSeriesRecord* analysis = &rec;
    TimeSeriesRecord resampled;
    if (rec.sample_rate_hz > dsp_cfg.analysis_rate_hz) {
        resampled = dsp::resample_to(rec, dsp_cfg.analysis_rate_hz);
        analysis = &resampled;
    }
    auto segments = dsp::segment(*analysis, dsp_cfg.window_s, dsp_cfg.hop_s);

    TrialAnalysis out;
    out.saturated = rec.any_saturation();
    const dsp::Window window =
        dsp_cfg.window == "rectangular" ? dsp::Window::rectangular : dsp::Window::hann;

    std::array<std::vector<double>, 4> amp_acc, freq_acc;
    for (auto& seg : segments) {
        dsp::detrend_mean(seg);
        for (int ch = 0; ch < 4; ++ch) {
            const auto spec = dsp::amplitude_spectrum(seg.channels[static_cast<std::size_t>(ch)],
                                                      seg.sample_rate_hz, window);
            const dsp::PeakEstimate peak =
                f_target_hz ? dsp::peak_near(spec, *f_target_hz, dsp_cfg.peak_halfwidth_hz)
                            : dsp::detect_dominant(spec, 0.5,
                                                   std::min(48.0, spec.nyquist_hz() * 0.96));
            amp_acc[static_cast<std::size_t>(ch)].push_back(peak.amplitude);
            freq_acc[static_cast<std::size_t>(ch)].push_back(peak.frequency_hz);
        }
    }
    for (int ch = 0; ch < 4; ++ch) {
        out.amplitude_v[static_cast<std::size_t>(ch)] =
            dsp::aggregate_trials(amp_acc[static_cast<std::size_t>(ch)]).mean;
        out.frequency_hz[static_cast<std::size_t>(ch)] =
            dsp::aggregate_trials(freq_acc[static_cast<std::size_t>(ch)]).mean;
    }
    return out;
}

// ---------------------------------------------------------------------------
// protocol runners

namespace {

void add_metric(ExperimentReport& rep, const std::string& name, double value, double target,
                double tolerance, bool informational = false) {
    MetricResult m;
    m.name = name;
    m.value = value;
    m.target = target;
    m.tolerance = tolerance;
    m.informational = informational;
    m.pass = informational || std::abs(value - target) <= tolerance;
    rep.metrics.push_back(std::move(m));
}

void add_info(ExperimentReport& rep, const std::string& name, double value) {
    add_metric(rep, name, value, 0.0, 0.0, true);
}

std::ofstream open_artifact(ExperimentReport& rep, const std::filesystem::path& out_dir,
                            const std::string& name) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path path = out_dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write artifact: " + path.string());
    if (name.ends_with(".csv"))
        out << "# schema_version=1\n# config_digest=" << rep.config_digest << "\n";
    rep.artifacts.push_back(name);
    return out;
}

std::uint64_t trial_seed(const ScenarioConfig& cfg, std::size_t point, std::size_t trial) {
    return cfg.seed + point * static_cast<std::size_t>(cfg.trials) + trial;
}

DipoleSource scenario_source(const ScenarioConfig& cfg, const Eigen::Vector3d& drive, double f_hz) {
    DipoleSource src = cfg.source;
    src.drive_axis = drive;
    src.frequency_hz = f_hz;
    return src;
}

TimeSeriesRecord run_trial(const ScenarioConfig& cfg, const DipoleSource& src, double l_m,
                           double t_m, double duration_s, std::uint64_t seed,
                           bool noise_free = false) {
    TrialGeometry geom = cfg.geometry;
    geom.l_m = l_m;
    geom.t_m = t_m;
    ChannelCalibration cal = cfg.cal;
    if (noise_free) cal.noise_std_ohm = 0.0;
    return simulate_dipole_trial(src, geom, cfg.drag, cal, cfg.readout, duration_s, seed);
}

ExperimentReport run_static(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    ExperimentReport rep;
    rep.config_digest = config_digest(cfg);
    namespace tg = defaults::targets;

    const auto grid = static_force_grid(cfg.static_sweep.max_force_n, cfg.static_sweep.steps);
    std::vector<double> force_axis(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) force_axis[i] = grid[i][0];

    std::ofstream csv = open_artifact(rep, out_dir, "static_sweep.csv");
    csv << "trial,force_n,r1_ohm,r2_ohm,r3_ohm,r4_ohm\n";

    std::array<std::vector<double>, 4> slopes;
    double min_r2 = 1.0;
    std::vector<double> ratios;
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const auto rows =
            simulate_static_sweep(grid, cfg.cal, trial_seed(cfg, 0, static_cast<std::size_t>(trial)));
        std::array<std::vector<double>, 4> resistance;
        for (const auto& row : rows) {
            csv << trial << ',' << io::format_double(row.force_n[0]);
            for (int ch = 0; ch < 4; ++ch) {
                csv << ',' << io::format_double(row.resistance_ohm[ch]);
                resistance[static_cast<std::size_t>(ch)].push_back(row.resistance_ohm[ch]);
            }
            csv << '\n';
        }
        for (int ch = 0; ch < 4; ++ch) {
            const auto fit = calibration::fit_linear(force_axis, resistance[static_cast<std::size_t>(ch)]);
            slopes[static_cast<std::size_t>(ch)].push_back(fit.slope);
            if (ch == 0 || ch == 2) min_r2 = std::min(min_r2, fit.r_squared);
        }
        ratios.push_back(std::abs(slopes[0].back()) / std::abs(slopes[2].back()));
    }

    const double s1 = dsp::aggregate_trials(slopes[0]).mean;
    const double s2 = dsp::aggregate_trials(slopes[1]).mean;
    const double s3 = dsp::aggregate_trials(slopes[2]).mean;
    const double s4 = dsp::aggregate_trials(slopes[3]).mean;

    add_metric(rep, "slope_ch1_ohm_per_n", s1, tg::ch1_slope_ohm_per_n,
               0.005 * std::abs(tg::ch1_slope_ohm_per_n));
    add_metric(rep, "slope_ch3_ohm_per_n", s3, tg::ch3_slope_ohm_per_n,
               0.005 * std::abs(tg::ch3_slope_ohm_per_n));
    add_metric(rep, "min_r_squared", min_r2, 1.0, 1e-3);
    add_metric(rep, "slope_ratio_ch1_ch3", dsp::aggregate_trials(ratios).mean,
               std::abs(tg::ch1_slope_ohm_per_n / tg::ch3_slope_ohm_per_n),
               0.01 * std::abs(tg::ch1_slope_ohm_per_n / tg::ch3_slope_ohm_per_n));

    const Eigen::Vector4d dr_max =
        force_to_delta_r({cfg.static_sweep.max_force_n, 0.0}, cfg.cal);
    add_metric(rep, "delta_r1_at_max_ohm", dr_max[0], tg::delta_r1_at_max_ohm, 0.1);
    add_metric(rep, "delta_r3_at_max_ohm", dr_max[2], tg::delta_r3_at_max_ohm, 0.1);

    const double lod = calibration::limit_of_detection(cfg.cal.noise_std_ohm,
                                                       cfg.cal.sensitivity_ohm_per_n(0, 0));
    add_metric(rep, "lod_n", lod, tg::lod_n, 0.02 * tg::lod_n);
    add_info(rep, "lod_from_fitted_slope_n",
             calibration::limit_of_detection(cfg.cal.noise_std_ohm, s1));
    add_info(rep, "slope_ch2_ohm_per_n", s2);
    add_info(rep, "slope_ch4_ohm_per_n", s4);
    return rep;
}

ExperimentReport run_fatigue(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    ExperimentReport rep;
    rep.config_digest = config_digest(cfg);
    namespace tg = defaults::targets;

    FatigueConfig fc;
    fc.cycles = cfg.fatigue.cycles;
    fc.stroke_freq_hz = cfg.fatigue.stroke_freq_hz;
    fc.sample_rate_hz = cfg.fatigue.sample_rate_hz;
    fc.load_amplitude_n = cfg.fatigue.load_amplitude_n;
    fc.drift_ppm_per_cycle = cfg.fatigue.drift_ppm_per_cycle;

    const FatigueResult result = simulate_fatigue(fc, cfg.cal, cfg.seed);
    const auto extrema = calibration::cycle_extrema(result.record, result.cycle_marks);

    std::ofstream csv = open_artifact(rep, out_dir, "fatigue_extrema.csv");
    csv << "cycle,ch1_max_ohm,ch3_min_ohm,ch1_max_index,ch3_min_index\n";
    for (std::size_t c = 0; c < extrema.ch1_max.size(); ++c)
        csv << c << ',' << io::format_double(extrema.ch1_max[c]) << ','
            << io::format_double(extrema.ch3_min[c]) << ',' << extrema.ch1_max_index[c] << ','
            << extrema.ch3_min_index[c] << '\n';

    if (cfg.fatigue.emit_record) {
        std::filesystem::create_directories(out_dir);
        io::write_record_csv(result.record, out_dir / "fatigue_record.csv");
        rep.artifacts.push_back("fatigue_record.csv");
    }

    const auto drift1 = calibration::drift_metrics(extrema.ch1_max, cfg.cal.baseline_ohm);
    const auto drift3 = calibration::drift_metrics(extrema.ch3_min, cfg.cal.baseline_ohm);

    add_metric(rep, "extrema_pairs", static_cast<double>(extrema.ch1_max.size()),
               static_cast<double>(cfg.fatigue.cycles), 0.0);
    add_metric(rep, "cum_offset_ch1_pct", drift1.cumulative_offset_pct, tg::fatigue_ch1_offset_pct,
               0.10 * tg::fatigue_ch1_offset_pct);
    add_metric(rep, "cum_offset_ch3_pct", drift3.cumulative_offset_pct, tg::fatigue_ch3_offset_pct,
               0.10 * tg::fatigue_ch3_offset_pct);
    add_info(rep, "drift_rate_ch1_ppm_per_cycle", drift1.drift_rate_ppm_per_cycle);
    add_info(rep, "drift_rate_ch3_ppm_per_cycle", drift3.drift_rate_ppm_per_cycle);

    // Phase opposition: both extrema sit at the cycle marks and deviate from
    // baseline with opposite signs.
    double max_gap = 0.0;
    bool signs_opposed = true;
    for (std::size_t c = 0; c < extrema.ch1_max.size(); ++c) {
        const double gap1 = std::abs(static_cast<double>(extrema.ch1_max_index[c]) -
                                     static_cast<double>(result.cycle_marks[c]));
        const double gap3 = std::abs(static_cast<double>(extrema.ch3_min_index[c]) -
                                     static_cast<double>(result.cycle_marks[c]));
        max_gap = std::max({max_gap, gap1, gap3});
        if ((extrema.ch1_max[c] - cfg.cal.baseline_ohm) *
                (extrema.ch3_min[c] - cfg.cal.baseline_ohm) >= 0.0)
            signs_opposed = false;
    }
    add_metric(rep, "extrema_alignment_samples", max_gap, 0.0, 1.0);
    add_metric(rep, "phase_opposed", signs_opposed ? 1.0 : 0.0, 1.0, 0.0);
    return rep;
}

ExperimentReport run_freq(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    ExperimentReport rep;
    rep.config_digest = config_digest(cfg);

    const auto& fp = cfg.freq_sweep;
    if (!(fp.lo_hz > 0.0) || !(fp.hi_hz > fp.lo_hz) || !(fp.step_hz > 0.0))
        throw ConfigError("config.freq_sweep: invalid band");
    if (fp.hi_hz > 0.48 * cfg.dsp.analysis_rate_hz)
        throw ConfigError(
            "config.freq_sweep.hi_hz: beyond the validated envelope for this analysis rate; "
            "raise dsp.analysis_rate_hz to sweep higher tones");

    std::vector<double> commanded;
    for (double tone = fp.lo_hz; tone <= fp.hi_hz + 1e-9; tone += fp.step_hz) {
        const double u =
            rng::uniform(cfg.seed, 0xf0f0, commanded.size()) * 2.0 * fp.offset_span_hz -
            fp.offset_span_hz;
        commanded.push_back(std::clamp(tone + u, fp.lo_hz, fp.hi_hz));
    }
    const Eigen::Vector3d drive = drive_axis_from_name(fp.drive);

    struct ToneResult {
        std::array<std::vector<double>, 4> detected;  // per channel, per trial
        std::array<std::vector<double>, 4> amplitude;
    };
    std::vector<ToneResult> tones(commanded.size());

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(commanded.size()); ++j) {
        ToneResult& tr = tones[static_cast<std::size_t>(j)];
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const DipoleSource src =
                scenario_source(cfg, drive, commanded[static_cast<std::size_t>(j)]);
            const TimeSeriesRecord rec = run_trial(
                cfg, src, cfg.geometry.l_m, cfg.geometry.t_m, fp.duration_s,
                trial_seed(cfg, static_cast<std::size_t>(j), static_cast<std::size_t>(trial)));
            const TrialAnalysis ana = analyze_record(rec, cfg.dsp, std::nullopt);
            for (int ch = 0; ch < 4; ++ch) {
                tr.detected[static_cast<std::size_t>(ch)].push_back(
                    ana.frequency_hz[static_cast<std::size_t>(ch)]);
                tr.amplitude[static_cast<std::size_t>(ch)].push_back(
                    ana.amplitude_v[static_cast<std::size_t>(ch)]);
            }
        }
    }

    std::ofstream csv = open_artifact(rep, out_dir, "freq_sweep.csv");
    csv << "commanded_hz,trial,channel,detected_hz,amplitude_v\n";
    for (std::size_t j = 0; j < commanded.size(); ++j)
        for (int trial = 0; trial < cfg.trials; ++trial)
            for (int ch = 0; ch < 4; ++ch)
                csv << io::format_double(commanded[j]) << ',' << trial << ',' << ch + 1 << ','
                    << io::format_double(
                           tones[j].detected[static_cast<std::size_t>(ch)][static_cast<std::size_t>(trial)])
                    << ','
                    << io::format_double(
                           tones[j].amplitude[static_cast<std::size_t>(ch)][static_cast<std::size_t>(trial)])
                    << '\n';

    double worst_r2 = 1.0, worst_slope_dev = 0.0, worst_max_err = 0.0, worst_rmse = 0.0;
    double worst_median = 0.0, worst_mean = 0.0;
    for (int ch = 0; ch < 4; ++ch) {
        std::vector<double> detected_mean(commanded.size());
        for (std::size_t j = 0; j < commanded.size(); ++j)
            detected_mean[j] =
                dsp::aggregate_trials(tones[j].detected[static_cast<std::size_t>(ch)]).mean;
        const auto track = calibration::freq_tracking_metrics(commanded, detected_mean);
        worst_r2 = std::min(worst_r2, track.r_squared);
        worst_slope_dev = std::max(worst_slope_dev, std::abs(track.slope - 1.0));
        worst_max_err = std::max(worst_max_err, track.max_abs_err_hz);
        worst_rmse = std::max(worst_rmse, track.rmse_hz);
        worst_median = std::max(worst_median, track.median_abs_err_hz);
        worst_mean = std::max(worst_mean, track.mean_abs_err_hz);
    }

    add_metric(rep, "freq_r_squared_min", worst_r2, 1.0, 1e-4);
    add_metric(rep, "freq_slope_dev_max", worst_slope_dev, 0.0, 1e-3);
    add_metric(rep, "freq_max_abs_err_hz", worst_max_err, 0.0, 0.09);
    add_metric(rep, "freq_rmse_max_hz", worst_rmse, 0.0, 0.05);
    add_info(rep, "freq_median_abs_err_hz", worst_median);
    add_info(rep, "freq_mean_abs_err_hz", worst_mean);
    add_info(rep, "tone_count", static_cast<double>(commanded.size()));
    return rep;
}

ExperimentReport run_longitudinal(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    ExperimentReport rep;
    rep.config_digest = config_digest(cfg);
    namespace tg = defaults::targets;

    const auto& sp = cfg.longitudinal_sweep;
    if (sp.l_mm.size() < 4) throw ConfigError("config.longitudinal_sweep.l_mm: need >= 4 points");
    const Eigen::Vector3d drive = drive_axis_from_name("longitudinal");

    struct Point {
        double l_mm = 0.0;
        std::array<double, 4> amp_mean{}, amp_std{};
        bool saturated = false;
    };
    std::vector<Point> points(sp.l_mm.size());

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(sp.l_mm.size()); ++p) {
        Point& pt = points[static_cast<std::size_t>(p)];
        pt.l_mm = sp.l_mm[static_cast<std::size_t>(p)];
        std::array<std::vector<double>, 4> amps;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const DipoleSource src = scenario_source(cfg, drive, sp.f_hz);
            const TimeSeriesRecord rec = run_trial(
                cfg, src, pt.l_mm * 1e-3, 0.0, sp.duration_s,
                trial_seed(cfg, static_cast<std::size_t>(p), static_cast<std::size_t>(trial)));
            const TrialAnalysis ana = analyze_record(rec, cfg.dsp, sp.f_hz);
            pt.saturated = pt.saturated || ana.saturated;
            for (int ch = 0; ch < 4; ++ch)
                amps[static_cast<std::size_t>(ch)].push_back(
                    ana.amplitude_v[static_cast<std::size_t>(ch)]);
        }
        for (int ch = 0; ch < 4; ++ch) {
            const auto agg = dsp::aggregate_trials(amps[static_cast<std::size_t>(ch)]);
            pt.amp_mean[static_cast<std::size_t>(ch)] = agg.mean;
            pt.amp_std[static_cast<std::size_t>(ch)] = agg.std;
        }
    }

    std::ofstream csv = open_artifact(rep, out_dir, "longitudinal_sweep.csv");
    csv << "l_mm,channel,amp_mean_v,amp_std_v,saturated\n";
    for (const auto& pt : points)
        for (int ch = 0; ch < 4; ++ch)
            csv << io::format_double(pt.l_mm) << ',' << ch + 1 << ','
                << io::format_double(pt.amp_mean[static_cast<std::size_t>(ch)]) << ','
                << io::format_double(pt.amp_std[static_cast<std::size_t>(ch)]) << ','
                << (pt.saturated ? 1 : 0) << '\n';

    // Strongest channel at the nearest clean point drives the decay fit;
    // saturated points are excluded (clipping flattens the fundamental).
    int strongest = 0;
    for (const auto& pt : points) {
        if (pt.saturated) continue;
        strongest = static_cast<int>(
            std::max_element(pt.amp_mean.begin(), pt.amp_mean.end()) - pt.amp_mean.begin());
        break;
    }
    std::vector<double> l_fit, a_fit;
    int excluded = 0;
    for (const auto& pt : points) {
        if (pt.saturated) {
            ++excluded;
            continue;
        }
        l_fit.push_back(pt.l_mm * 1e-3);
        a_fit.push_back(pt.amp_mean[static_cast<std::size_t>(strongest)]);
    }
    const auto decay = localization::fit_decay(l_fit, a_fit);

    bool monotone = true;
    for (std::size_t p = 1; p < points.size(); ++p)
        if (points[p].amp_mean[static_cast<std::size_t>(strongest)] >=
            points[p - 1].amp_mean[static_cast<std::size_t>(strongest)])
            monotone = false;

    const auto range = localization::operational_range(cfg.forward);
    double min_dominance = std::numeric_limits<double>::infinity();
    for (const auto& pt : points) {
        if (range.finite && pt.l_mm * 1e-3 > range.l_m) continue;
        const double rms13 = std::sqrt(0.5 * (pt.amp_mean[0] * pt.amp_mean[0] +
                                              pt.amp_mean[2] * pt.amp_mean[2]));
        const double rms24 = std::sqrt(0.5 * (pt.amp_mean[1] * pt.amp_mean[1] +
                                              pt.amp_mean[3] * pt.amp_mean[3]));
        min_dominance = std::min(min_dominance, rms13 / std::max(rms24, 1e-12));
    }

    add_metric(rep, "decay_exponent", decay.exponent, 3.0, 0.3);
    add_metric(rep, "operational_range_mm", (range.finite ? range.l_m : 1.0) * 1e3,
               tg::operational_range_m * 1e3, 5.0);
    add_metric(rep, "amplitude_monotone_decreasing", monotone ? 1.0 : 0.0, 1.0, 0.0);
    add_metric(rep, "ch13_dominate_ch24", min_dominance > 1.0 ? 1.0 : 0.0, 1.0, 0.0);
    add_info(rep, "min_dominance_ratio", min_dominance);
    add_info(rep, "decay_fit_floor_v", decay.floor);
    add_info(rep, "strongest_channel", strongest + 1);
    add_info(rep, "saturated_points_excluded", excluded);
    return rep;
}

ExperimentReport run_transverse(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    ExperimentReport rep;
    rep.config_digest = config_digest(cfg);
    namespace tg = defaults::targets;

    const auto& sp = cfg.transverse_sweep;
    if (sp.t_mm.size() < 3) throw ConfigError("config.transverse_sweep.t_mm: need >= 3 points");
    const Eigen::Vector3d drive = drive_axis_from_name("transverse");

    struct Point {
        double t_mm = 0.0;
        std::array<double, 4> amp_mean{}, amp_std{}, amp_clean{};
    };
    std::vector<Point> points(sp.t_mm.size());

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(sp.t_mm.size()); ++p) {
        Point& pt = points[static_cast<std::size_t>(p)];
        pt.t_mm = sp.t_mm[static_cast<std::size_t>(p)];
        std::array<std::vector<double>, 4> amps;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const DipoleSource src = scenario_source(cfg, drive, sp.f_hz);
            const TimeSeriesRecord rec = run_trial(
                cfg, src, sp.l_mm * 1e-3, pt.t_mm * 1e-3, sp.duration_s,
                trial_seed(cfg, static_cast<std::size_t>(p), static_cast<std::size_t>(trial)));
            const TrialAnalysis ana = analyze_record(rec, cfg.dsp, sp.f_hz);
            for (int ch = 0; ch < 4; ++ch)
                amps[static_cast<std::size_t>(ch)].push_back(
                    ana.amplitude_v[static_cast<std::size_t>(ch)]);
        }
        for (int ch = 0; ch < 4; ++ch) {
            const auto agg = dsp::aggregate_trials(amps[static_cast<std::size_t>(ch)]);
            pt.amp_mean[static_cast<std::size_t>(ch)] = agg.mean;
            pt.amp_std[static_cast<std::size_t>(ch)] = agg.std;
        }
        // Noise-free repeat for the symmetry and peak-shape metrics.
        const DipoleSource src = scenario_source(cfg, drive, sp.f_hz);
        const TimeSeriesRecord clean =
            run_trial(cfg, src, sp.l_mm * 1e-3, pt.t_mm * 1e-3, sp.duration_s, cfg.seed, true);
        pt.amp_clean = analyze_record(clean, cfg.dsp, sp.f_hz).amplitude_v;
    }

    std::ofstream csv = open_artifact(rep, out_dir, "transverse_sweep.csv");
    csv << "t_mm,channel,amp_mean_v,amp_std_v,amp_noise_free_v\n";
    for (const auto& pt : points)
        for (int ch = 0; ch < 4; ++ch)
            csv << io::format_double(pt.t_mm) << ',' << ch + 1 << ','
                << io::format_double(pt.amp_mean[static_cast<std::size_t>(ch)]) << ','
                << io::format_double(pt.amp_std[static_cast<std::size_t>(ch)]) << ','
                << io::format_double(pt.amp_clean[static_cast<std::size_t>(ch)]) << '\n';

    // Strongest transverse channel (4) carries the profile metrics.
    const auto find_point = [&](double t_mm) -> const Point* {
        for (const auto& pt : points)
            if (std::abs(pt.t_mm - t_mm) < 1e-9) return &pt;
        return nullptr;
    };
    const Point* center = find_point(0.0);
    if (!center) throw ConfigError("config.transverse_sweep.t_mm: must include T = 0");
    const double peak_amp = center->amp_clean[3];

    double sym_dev = 0.0;
    bool peak_at_center = true;
    for (const auto& pt : points) {
        if (pt.t_mm > 0.0) {
            if (const Point* mirror = find_point(-pt.t_mm))
                sym_dev = std::max(sym_dev,
                                   std::abs(pt.amp_clean[3] - mirror->amp_clean[3]) / peak_amp);
        }
        if (pt.t_mm != 0.0 && pt.amp_clean[3] >= peak_amp) peak_at_center = false;
    }

    double fall = 1.0;  // relative drop within +-20 mm of the peak
    for (const auto& pt : points)
        if (std::abs(std::abs(pt.t_mm) - 20.0) < 1e-9)
            fall = std::min(fall, 1.0 - pt.amp_clean[3] / peak_amp);

    const auto fwd = localization::forward_amplitudes(cfg.forward, sp.l_mm * 1e-3, 0.0,
                                                      localization::DriveAxis::transverse);

    add_metric(rep, "symmetry_max_rel_dev", sym_dev, 0.0, 0.05);
    add_metric(rep, "peak_at_center", peak_at_center ? 1.0 : 0.0, 1.0, 0.0);
    add_metric(rep, "fall_within_20mm_rel", fall, 1.0, 0.5);
    add_metric(rep, "forward_a4_v", fwd[3], tg::transverse_a4_v, 0.15 * tg::transverse_a4_v);
    add_metric(rep, "forward_a1_v", fwd[0], tg::transverse_a1_v, 0.15 * tg::transverse_a1_v);
    const double target_ratio = tg::transverse_a4_v / tg::transverse_a1_v;
    add_metric(rep, "forward_ratio_a4_a1", fwd[3] / fwd[0], target_ratio, 0.15 * target_ratio);
    add_info(rep, "sim_a4_at_center_v", center->amp_clean[3]);
    add_info(rep, "sim_a1_at_center_v", center->amp_clean[0]);
    return rep;
}

ExperimentReport run_localize(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    ExperimentReport rep;
    rep.config_digest = config_digest(cfg);

    std::array<double, 4> amps{};
    double freq = cfg.loc.frequency_hz;
    if (!cfg.loc.record.empty()) {
        const TimeSeriesRecord rec = io::ingest(cfg.loc.record);
        const TrialAnalysis ana = analyze_record(rec, cfg.dsp, std::nullopt);
        int strongest = 0;
        for (int ch = 1; ch < 4; ++ch)
            if (ana.amplitude_v[static_cast<std::size_t>(ch)] >
                ana.amplitude_v[static_cast<std::size_t>(strongest)])
                strongest = ch;
        freq = ana.frequency_hz[static_cast<std::size_t>(strongest)];
        // Re-read every channel at the dominant tone.
        const TimeSeriesRecord* analysis = &rec;
        TimeSeriesRecord resampled;
        if (rec.sample_rate_hz > cfg.dsp.analysis_rate_hz) {
            resampled = dsp::resample_to(rec, cfg.dsp.analysis_rate_hz);
            analysis = &resampled;
        }
        const TrialAnalysis at_tone = analyze_record(*analysis, cfg.dsp, freq);
        amps = at_tone.amplitude_v;
    } else if (cfg.loc.has_amplitudes) {
        amps = cfg.loc.amplitudes_v;
    } else {
        throw ConfigError("config.localize: needs either record or amplitudes_v");
    }

    std::vector<localization::DriveAxis> hypotheses;
    if (cfg.loc.hypotheses == "longitudinal")
        hypotheses = {localization::DriveAxis::longitudinal};
    else if (cfg.loc.hypotheses == "transverse")
        hypotheses = {localization::DriveAxis::transverse};
    else if (cfg.loc.hypotheses == "both")
        hypotheses = {localization::DriveAxis::longitudinal, localization::DriveAxis::transverse};
    else
        throw ConfigError("config.localize.hypotheses: longitudinal|transverse|both");

    const auto est = localization::localize(amps, freq, cfg.forward, hypotheses);

    json out;
    out["frequency_hz"] = est.frequency_hz;
    out["l_mm"] = est.l_m * 1e3;
    out["t_abs_mm"] = est.t_abs_m * 1e3;
    out["axis"] = est.axis == localization::Axis::longitudinal ? "longitudinal" : "transverse";
    out["drive_hypothesis"] =
        est.drive_hypothesis == localization::DriveAxis::longitudinal ? "longitudinal"
                                                                      : "transverse";
    out["residual"] = est.residual;
    out["in_range"] = est.in_range;
    std::ofstream jf = open_artifact(rep, out_dir, "localize.json");
    jf << out.dump(2) << "\n";

    add_info(rep, "l_mm", est.l_m * 1e3);
    add_info(rep, "t_abs_mm", est.t_abs_m * 1e3);
    add_info(rep, "axis_longitudinal", est.axis == localization::Axis::longitudinal ? 1.0 : 0.0);
    add_info(rep, "residual", est.residual);
    add_info(rep, "in_range", est.in_range ? 1.0 : 0.0);
    add_info(rep, "frequency_hz", est.frequency_hz);
    return rep;
}

ExperimentReport run_fit_defaults(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    ExperimentReport rep;
    rep.config_digest = config_digest(cfg);

    defaults::AnchorSet anchors;
    anchors.a4_v = cfg.fit.a4_v;
    anchors.a1_v = cfg.fit.a1_v;
    anchors.anchor_l_m = cfg.fit.anchor_l_mm * 1e-3;
    anchors.range_m = cfg.fit.range_mm * 1e-3;

    const defaults::FittedDefaults fitted =
        defaults::fit_default_params(anchors, cfg.cal, cfg.readout, cfg.source);

    json fragment;
    fragment["drag"] = {{"linear_gain_n_per_mps", fitted.drag.linear_gain_n_per_mps}};
    fragment["localization"] = {{"gain_v_per_mps", fitted.forward.gain_v_per_mps},
                                {"noise_floor_v", fitted.forward.noise_floor_v},
                                {"decay_exponent", fitted.forward.decay_exponent},
                                {"sphere_radius_m", fitted.forward.sphere_radius_m},
                                {"velocity_amplitude_mps", fitted.forward.velocity_amplitude_mps}};
    fragment["fit_residual_rms"] = fitted.residual;
    std::ofstream jf = open_artifact(rep, out_dir, "fitted_defaults.json");
    jf << fragment.dump(2) << "\n";

    const auto amp = localization::forward_amplitudes(fitted.forward, anchors.anchor_l_m, 0.0,
                                                      localization::DriveAxis::transverse);
    const auto range = localization::operational_range(fitted.forward);

    add_metric(rep, "fit_residual_rms", fitted.residual, 0.0, 1e-9);
    add_metric(rep, "anchor_a4_v", amp[3], anchors.a4_v, 0.15 * anchors.a4_v);
    add_metric(rep, "anchor_a1_v", amp[0], anchors.a1_v, 0.15 * anchors.a1_v);
    add_metric(rep, "anchor_range_mm", (range.finite ? range.l_m : 1.0) * 1e3,
               anchors.range_m * 1e3, 5.0);
    add_info(rep, "drag_gain_n_per_mps", fitted.drag.linear_gain_n_per_mps);
    add_info(rep, "floor_ch1_v", fitted.forward.noise_floor_v[0]);
    add_info(rep, "floor_quiet_v", fitted.forward.noise_floor_v[1]);
    return rep;
}

}  // namespace

ExperimentReport run(const ScenarioConfig& cfg, const std::filesystem::path& out_dir, bool quiet) {
    ExperimentReport rep;
    switch (cfg.kind) {
        case Kind::static_sweep: rep = run_static(cfg, out_dir); break;
        case Kind::fatigue: rep = run_fatigue(cfg, out_dir); break;
        case Kind::freq_sweep: rep = run_freq(cfg, out_dir); break;
        case Kind::longitudinal_sweep: rep = run_longitudinal(cfg, out_dir); break;
        case Kind::transverse_sweep: rep = run_transverse(cfg, out_dir); break;
        case Kind::localize: rep = run_localize(cfg, out_dir); break;
        case Kind::fit_defaults: rep = run_fit_defaults(cfg, out_dir); break;
    }
    rep.timestamp = iso_timestamp();
    rep.artifacts.push_back("report.json");

    std::filesystem::create_directories(out_dir);
    std::ofstream jf(out_dir / "report.json", std::ios::binary);
    jf << rep.to_json().dump(2) << "\n";

    if (!quiet) {
        for (const auto& m : rep.metrics) {
            std::cout << (m.informational ? "[info] " : (m.pass ? "[pass] " : "[FAIL] "))
                      << m.name << " = " << m.value;
            if (!m.informational)
                std::cout << " (target " << m.target << " +- " << m.tolerance << ")";
            std::cout << "\n";
        }
    }
    return rep;
}

}  // namespace whisker::experiment
