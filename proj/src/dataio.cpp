#include "hcsp/dataio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hcsp/error.hpp"

namespace hcsp {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "trial files are little-endian float32");

void TrialMatrix::validate() const {
    if (channels() < 2) fail(ErrorKind::Parameter, "trial needs at least 2 channels");
    if (samples() < 1) fail(ErrorKind::Parameter, "trial has no samples");
    if (!(sample_rate_hz > 0.0)) fail(ErrorKind::Parameter, "sample rate must be positive");
    if (!data.allFinite()) fail(ErrorKind::Parameter, "trial contains non-finite samples");
}

std::vector<GestureClass> Dataset::labels() const {
    std::vector<GestureClass> out;
    out.reserve(trials.size());
    for (const auto& t : trials) out.push_back(t.meta.gesture);
    return out;
}

SampleRange segment_range(const TrialMeta& meta, double sample_rate_hz) {
    return {static_cast<Eigen::Index>(std::llround(meta.onset_s * sample_rate_hz)),
            static_cast<Eigen::Index>(std::llround(meta.duration_s * sample_rate_hz))};
}

TrialMatrix mi_segment(const Trial& trial) {
    const auto r = segment_range(trial.meta, trial.matrix.sample_rate_hz);
    return {trial.matrix.data.middleCols(r.first, r.count), trial.matrix.sample_rate_hz};
}

namespace {

TrialMatrix read_binary(const fs::path& path, Eigen::Index channels, double fs_hz) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Load, "cannot open trial file " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto frame = static_cast<std::size_t>(4 * channels);
    if (channels < 1 || bytes.size() % frame != 0) {
        fail(ErrorKind::Load, "trial file " + path.string() + " size " + std::to_string(bytes.size()) +
                                  " is not a multiple of 4*" + std::to_string(channels) + " bytes");
    }
    const auto n = static_cast<Eigen::Index>(bytes.size() / frame);
    std::vector<float> values(bytes.size() / 4);
    std::memcpy(values.data(), bytes.data(), bytes.size());
    TrialMatrix t{Eigen::MatrixXd(channels, n), fs_hz};
    // Row-major samples x channels is column-major channels x samples.
    t.data = Eigen::Map<const Eigen::MatrixXf>(values.data(), channels, n).cast<double>();
    return t;
}

TrialMatrix read_csv(const fs::path& path, Eigen::Index channels, double fs_hz) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Load, "cannot open trial file " + path.string());
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::Load, "trial file " + path.string() + " is empty");
    const auto header_cols = std::count(line.begin(), line.end(), ',') + 1;
    if (channels > 0 && header_cols != channels) {
        fail(ErrorKind::Load, "trial file " + path.string() + " has " + std::to_string(header_cols) +
                                  " columns, expected " + std::to_string(channels));
    }
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        Eigen::Index cols = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                fail(ErrorKind::Load, "trial file " + path.string() + " row " + std::to_string(rows + 2) +
                                          ": bad number '" + cell + "'");
            }
            ++cols;
        }
        if (cols != header_cols) {
            fail(ErrorKind::Load, "trial file " + path.string() + " row " + std::to_string(rows + 2) +
                                      " has " + std::to_string(cols) + " columns");
        }
        ++rows;
    }
    TrialMatrix t{Eigen::Map<const Eigen::MatrixXd>(values.data(), header_cols,
                                                    static_cast<Eigen::Index>(rows)),
                  fs_hz};
    return t;
}

}  // namespace

TrialMatrix read_trial_file(const fs::path& path, Eigen::Index channels, double sample_rate_hz) {
    if (!fs::exists(path)) fail(ErrorKind::Load, "missing trial file " + path.string());
    const auto ext = path.extension().string();
    if (ext == ".f32") return read_binary(path, channels, sample_rate_hz);
    if (ext == ".csv") return read_csv(path, channels, sample_rate_hz);
    fail(ErrorKind::Load, "unknown trial file extension '" + ext + "' for " + path.string());
}

void write_trial_file(const fs::path& path, const TrialMatrix& trial,
                      const std::vector<std::string>& channel_names) {
    const auto ext = path.extension().string();
    if (ext == ".f32") {
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorKind::Io, "cannot create " + path.string());
        const Eigen::MatrixXf f = trial.data.cast<float>();
        out.write(reinterpret_cast<const char*>(f.data()),
                  static_cast<std::streamsize>(f.size() * sizeof(float)));
        if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
        return;
    }
    if (ext == ".csv") {
        std::ofstream out(path);
        if (!out) fail(ErrorKind::Io, "cannot create " + path.string());
        for (std::size_t c = 0; c < channel_names.size(); ++c) out << (c ? "," : "") << channel_names[c];
        out << '\n' << std::setprecision(17);
        for (Eigen::Index s = 0; s < trial.samples(); ++s) {
            for (Eigen::Index c = 0; c < trial.channels(); ++c) out << (c ? "," : "") << trial.data(c, s);
            out << '\n';
        }
        if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
        return;
    }
    fail(ErrorKind::Io, "unknown trial file extension '" + ext + "'");
}

namespace {

template <typename E>
E parse_side(const json& j, const char* key, const char* neg, const char* pos) {
    if (!j.contains(key) || !j[key].is_string()) {
        fail(ErrorKind::Schema, std::string("gesture is missing string field '") + key + "'");
    }
    const auto v = j[key].get<std::string>();
    if (v == neg) return static_cast<E>(-1);
    if (v == pos) return static_cast<E>(+1);
    fail(ErrorKind::Schema, std::string("unknown gesture label ") + key + "='" + v + "'");
}

double number_field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number()) {
        fail(ErrorKind::Schema, where + ": missing numeric field '" + key + "'");
    }
    return j[key].get<double>();
}

}  // namespace

Dataset load_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) fail(ErrorKind::Load, "cannot open manifest " + manifest_path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Schema, "manifest " + manifest_path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) fail(ErrorKind::Schema, "manifest must be a JSON object");

    Dataset ds;
    ds.subject_id = j.value("subject_id", std::string{});
    ds.sample_rate_hz = number_field(j, "sample_rate_hz", "manifest");
    if (!(ds.sample_rate_hz > 0)) fail(ErrorKind::Schema, "sample_rate_hz must be positive");
    if (!j.contains("channels") || !j["channels"].is_array()) {
        fail(ErrorKind::Schema, "manifest is missing the 'channels' array");
    }
    ds.channel_names = j["channels"].get<std::vector<std::string>>();
    if (!j.contains("trials") || !j["trials"].is_array()) {
        fail(ErrorKind::Schema, "manifest is missing the 'trials' array");
    }
    const auto m = static_cast<Eigen::Index>(ds.channel_names.size());
    const fs::path root = manifest_path.parent_path();

    for (std::size_t i = 0; i < j["trials"].size(); ++i) {
        const auto& jt = j["trials"][i];
        const std::string where = "trial " + std::to_string(i);
        if (!jt.contains("file") || !jt["file"].is_string()) fail(ErrorKind::Schema, where + ": missing 'file'");
        if (!jt.contains("gesture") || !jt["gesture"].is_object()) {
            fail(ErrorKind::Schema, where + ": missing 'gesture' object");
        }
        Trial t;
        t.meta.file_path = jt["file"].get<std::string>();
        const auto& g = jt["gesture"];
        t.meta.gesture = {parse_side<Hand>(g, "hand", "left", "right"),
                          parse_side<Fingers>(g, "fingers", "extension", "flexion"),
                          parse_side<Thumb>(g, "thumb", "abduction", "adduction")};
        t.meta.onset_s = number_field(jt, "onset_s", where);
        t.meta.duration_s = number_field(jt, "duration_s", where);
        if (t.meta.onset_s < 0) fail(ErrorKind::Schema, where + ": onset_s must be >= 0");
        if (!(t.meta.duration_s > 0)) fail(ErrorKind::Schema, where + ": duration_s must be > 0");

        // CSV files carry their own channel count, checked against the manifest below.
        const bool csv = t.meta.file_path.extension() == ".csv";
        t.matrix = read_trial_file(root / t.meta.file_path, csv ? 0 : m, ds.sample_rate_hz);
        if (t.matrix.channels() != m) {
            fail(ErrorKind::Schema, where + " (" + t.meta.file_path.string() + ") has " +
                                        std::to_string(t.matrix.channels()) + " channels, manifest lists " +
                                        std::to_string(m));
        }
        const auto r = segment_range(t.meta, ds.sample_rate_hz);
        if (r.count < 1 || r.first + r.count > t.matrix.samples()) {
            fail(ErrorKind::Schema, where + " (" + t.meta.file_path.string() + ") is too short: window needs " +
                                        std::to_string(r.first + r.count) + " samples, file has " +
                                        std::to_string(t.matrix.samples()));
        }
        ds.trials.push_back(std::move(t));
    }
    return ds;
}

fs::path write_dataset(const Dataset& ds, const fs::path& dir, TrialFormat format) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());

    json j;
    j["subject_id"] = ds.subject_id;
    j["sample_rate_hz"] = ds.sample_rate_hz;
    j["channels"] = ds.channel_names;
    j["trials"] = json::array();
    const char* ext = format == TrialFormat::Binary ? ".f32" : ".csv";
    for (std::size_t i = 0; i < ds.trials.size(); ++i) {
        const auto& t = ds.trials[i];
        std::ostringstream name;
        name << "trial_" << std::setw(4) << std::setfill('0') << i << ext;
        write_trial_file(dir / name.str(), t.matrix, ds.channel_names);
        const auto& g = t.meta.gesture;
        j["trials"].push_back({{"file", name.str()},
                               {"gesture",
                                {{"hand", to_string(g.hand)},
                                 {"fingers", to_string(g.fingers)},
                                 {"thumb", to_string(g.thumb)}}},
                               {"onset_s", t.meta.onset_s},
                               {"duration_s", t.meta.duration_s}});
    }
    const auto manifest = dir / "manifest.json";
    std::ofstream out(manifest);
    if (!out) fail(ErrorKind::Io, "cannot create " + manifest.string());
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorKind::Io, "failed writing " + manifest.string());
    return manifest;
}

std::array<int, kNumGestures> gesture_counts(const Dataset& ds) {
    std::array<int, kNumGestures> counts{};
    for (const auto& t : ds.trials) ++counts[t.meta.gesture.leaf_index()];
    return counts;
}

Partition partition(const Dataset& ds, Level level, const CategoryScope& scope) {
    const auto labels = ds.labels();
    return partition(std::span<const GestureClass>(labels), level, scope);
}

}  // namespace hcsp
