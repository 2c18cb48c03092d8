#include "klift/io.hpp"

#include "klift/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace klift {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    // shortest representation that parses back to the same double
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw IoError("not a number: '" + s + "'");
    return v;
}

json dictionary_to_json(const Dictionary& d) {
    json parts = json::array();
    for (const auto& b : d.blocks()) {
        json j;
        std::visit(
            [&](const auto& blk) {
                using T = std::decay_t<decltype(blk)>;
                if constexpr (std::is_same_v<T, MonomialBlock>) {
                    j = {{"kind", "monomial"}, {"n", blk.n}, {"m", blk.m}};
                } else if constexpr (std::is_same_v<T, RbfBlock>) {
                    json c = json::array();
                    for (Index r = 0; r < blk.centers.rows(); ++r) {
                        json row = json::array();
                        for (Index i = 0; i < blk.centers.cols(); ++i) row.push_back(blk.centers(r, i));
                        c.push_back(row);
                    }
                    j = {{"kind", "rbf"}, {"gamma", blk.gamma}, {"centers", c}};
                } else if constexpr (std::is_same_v<T, HillBlock>) {
                    std::vector<int> ks;
                    for (int k : blk.ks) ks.push_back(k + 1);
                    j = {{"kind", "hill"}, {"n", blk.n}, {"ks", ks}, {"ls", blk.ls}};
                } else {
                    j = {{"kind", "sindiff"}, {"n", blk.n}, {"target", blk.target + 1}};
                }
            },
            b);
        parts.push_back(j);
    }
    if (parts.size() == 1) return parts[0];
    return {{"kind", "composite"}, {"parts", parts}};
}

namespace {

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

}  // namespace

Dictionary dictionary_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("dictionary descriptor must be an object");
    const auto kind = get_field<std::string>(j, "kind", "dictionary");
    if (kind == "monomial") return Dictionary::monomial(get_field<int>(j, "n", "dictionary"), get_field<int>(j, "m", "dictionary"));
    if (kind == "rbf") {
        const auto& c = j.at("centers");
        if (!c.is_array() || c.empty()) throw ConfigError("dictionary.centers must be a non-empty array");
        const auto n = c[0].size();
        Matrix C(static_cast<Index>(c.size()), static_cast<Index>(n));
        for (std::size_t r = 0; r < c.size(); ++r) {
            if (c[r].size() != n) throw ConfigError("dictionary.centers rows differ in length");
            for (std::size_t i = 0; i < n; ++i) C(static_cast<Index>(r), static_cast<Index>(i)) = c[r][i].get<double>();
        }
        return Dictionary::rbf(C, get_field<double>(j, "gamma", "dictionary"));
    }
    if (kind == "hill") {
        auto ks = get_field<std::vector<int>>(j, "ks", "dictionary");
        for (int& k : ks) --k;
        return Dictionary::hill(get_field<int>(j, "n", "dictionary"), ks, get_field<std::vector<int>>(j, "ls", "dictionary"));
    }
    if (kind == "sindiff")
        return Dictionary::sin_diff(get_field<int>(j, "n", "dictionary"), get_field<int>(j, "target", "dictionary") - 1);
    if (kind == "composite") {
        std::vector<Dictionary> parts;
        for (const auto& p : j.at("parts")) parts.push_back(dictionary_from_json(p));
        return Dictionary::composite(parts);
    }
    throw ConfigError("unknown dictionary kind '" + kind + "'");
}

json model_to_json(const VectorFieldModel& m) {
    json libs = json::array();
    for (const auto& l : m.libraries()) libs.push_back(dictionary_to_json(l));
    json coeffs = json::array();
    for (int j = 0; j < m.n(); ++j) {
        const Vector& w = m.coefficients(j);
        coeffs.push_back(std::vector<double>(w.data(), w.data() + w.size()));
    }
    return {{"format", "koopman-lift-model/1"}, {"n", m.n()}, {"p", m.p()}, {"libraries", libs}, {"coefficients", coeffs}};
}

VectorFieldModel model_from_json(const json& j) {
    if (!j.is_object() || j.value("format", "") != "koopman-lift-model/1")
        throw ConfigError("not a koopman-lift model file");
    const int n = get_field<int>(j, "n", "model");
    const int p = get_field<int>(j, "p", "model");
    std::vector<Dictionary> libs;
    for (const auto& l : j.at("libraries")) libs.push_back(dictionary_from_json(l));
    std::vector<Vector> W;
    for (const auto& c : j.at("coefficients")) {
        auto v = c.get<std::vector<double>>();
        W.push_back(Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size())));
    }
    return VectorFieldModel(libs, W, n, p);
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void write_json_file(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

void write_snapshots(const fs::path& csv_path, const SnapshotSet& data, const json& provenance) {
    validate(data);
    const int n = data.n();
    const int p = data.p();
    std::ostringstream os;
    os << "trajectory_id,pair_index";
    for (int i = 1; i <= n; ++i) os << ",x_" << i;
    for (int i = 1; i <= n; ++i) os << ",y_" << i;
    for (int i = 1; i <= p; ++i) os << ",u_" << i;
    os << "\n";
    for (Index k = 0; k < data.K(); ++k) {
        os << (data.trajectory_id.empty() ? 0 : data.trajectory_id[k]) << ","
           << (data.pair_index.empty() ? k : data.pair_index[k]);
        for (int i = 0; i < n; ++i) os << "," << format_double(data.X(k, i));
        for (int i = 0; i < n; ++i) os << "," << format_double(data.Y(k, i));
        for (int i = 0; i < p; ++i) os << "," << format_double((*data.inputs)(k, i));
        os << "\n";
    }
    write_text_file(csv_path, os.str());
    json prov = provenance;
    prov["system"] = prov.value("system", json(data.meta.system));
    prov["sigma_meas"] = data.meta.sigma_meas;
    prov["sigma_proc"] = data.meta.sigma_proc;
    prov["seed"] = data.meta.seed;
    json side = {{"format", "koopman-lift-snapshots/1"}, {"Ts", data.Ts}, {"n", n}, {"p", p}, {"K", data.K()},
                 {"provenance", prov}};
    fs::path sidecar = csv_path;
    sidecar.replace_extension(".json");
    write_json_file(sidecar, side);
}

SnapshotSet read_snapshots(const fs::path& csv_path, json* provenance) {
    fs::path sidecar = csv_path;
    sidecar.replace_extension(".json");
    json side;
    try {
        side = read_json_file(sidecar);
    } catch (const ConfigError& e) {
        throw IoError(std::string("malformed sidecar: ") + e.what());
    }
    if (side.value("format", "") != "koopman-lift-snapshots/1") throw IoError(sidecar.string() + ": not a snapshot sidecar");
    SnapshotSet d;
    int n = 0, p = 0;
    try {
        d.Ts = side.at("Ts").get<double>();
        n = side.at("n").get<int>();
        p = side.at("p").get<int>();
    } catch (const json::exception&) {
        throw IoError(sidecar.string() + ": Ts, n and p are required");
    }
    if (!(d.Ts > 0.0)) throw IoError(sidecar.string() + ": Ts must be positive");
    if (n < 1 || p < 0) throw IoError(sidecar.string() + ": invalid dimensions");

    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open " + csv_path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(csv_path.string() + ": empty file");
    std::vector<std::string> expect = {"trajectory_id", "pair_index"};
    for (int i = 1; i <= n; ++i) expect.push_back("x_" + std::to_string(i));
    for (int i = 1; i <= n; ++i) expect.push_back("y_" + std::to_string(i));
    for (int i = 1; i <= p; ++i) expect.push_back("u_" + std::to_string(i));
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream is(s);
        while (std::getline(is, cell, ',')) out.push_back(cell);
        if (!s.empty() && s.back() == ',') out.emplace_back();
        return out;
    };
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split(line) != expect)
        throw IoError(csv_path.string() + ": header does not match the sidecar dimensions (n = " + std::to_string(n) +
                      ", p = " + std::to_string(p) + ")");
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != expect.size())
            throw IoError(csv_path.string() + ": row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                          " columns, expected " + std::to_string(expect.size()));
        std::vector<double> v;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            try {
                v.push_back(parse_double(cells[c]));
            } catch (const IoError&) {
                throw IoError(csv_path.string() + ": row " + std::to_string(lineno) + ", column '" + expect[c] +
                              "': not a number ('" + cells[c] + "')");
            }
        }
        rows.push_back(std::move(v));
    }
    const auto K = static_cast<Index>(rows.size());
    if (K == 0) throw IoError(csv_path.string() + ": no snapshot rows");
    d.X.resize(K, n);
    d.Y.resize(K, n);
    if (p > 0) d.inputs = Matrix(K, p);
    for (Index k = 0; k < K; ++k) {
        const auto& r = rows[k];
        d.trajectory_id.push_back(static_cast<int>(r[0]));
        d.pair_index.push_back(static_cast<int>(r[1]));
        for (int i = 0; i < n; ++i) d.X(k, i) = r[2 + i];
        for (int i = 0; i < n; ++i) d.Y(k, i) = r[2 + n + i];
        for (int i = 0; i < p; ++i) (*d.inputs)(k, i) = r[2 + 2 * n + i];
    }
    const json prov = side.value("provenance", json::object());
    d.meta.system = prov.value("system", json("")).is_string() ? prov.value("system", "") : prov["system"].value("name", "");
    d.meta.sigma_meas = prov.value("sigma_meas", 0.0);
    d.meta.sigma_proc = prov.value("sigma_proc", 0.0);
    d.meta.seed = prov.value("seed", std::uint64_t{0});
    if (provenance) *provenance = prov;
    try {
        validate(d);
    } catch (const Error& e) {
        throw IoError(csv_path.string() + ": " + e.what());
    }
    return d;
}

}  // namespace klift
