#pragma once

#include "klift/bases.hpp"
#include "klift/model.hpp"
#include "klift/snapshots.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace klift {

using json = nlohmann::json;

// Shortest decimal form that round-trips the double exactly.
std::string format_double(double v);
double parse_double(const std::string& s);

// Resolved dictionary descriptors (explicit n, centers, 1-based indices).
json dictionary_to_json(const Dictionary& d);
Dictionary dictionary_from_json(const json& j);

json model_to_json(const VectorFieldModel& m);
VectorFieldModel model_from_json(const json& j);

// <stem>.csv with header trajectory_id,pair_index,x_1..x_n,y_1..y_n[,u_1..u_p]
// and <stem>.json sidecar {format, Ts, n, p, K, provenance}.
void write_snapshots(const std::filesystem::path& csv_path, const SnapshotSet& data, const json& provenance = json::object());
SnapshotSet read_snapshots(const std::filesystem::path& csv_path, json* provenance = nullptr);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace klift
