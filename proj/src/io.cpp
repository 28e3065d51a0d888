#include "ucb/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ucb {

void dump_field(const Field3& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open " + path + " for writing");
    const Grid3& g = f.grid;
    char header[256];
    std::snprintf(header, sizeof(header), "ucbgrid %d %d %d %d %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  g.band_n, g.nz, g.ny, g.ns, g.z_lo, g.z_hi, g.y_lo, g.y_hi, g.s_lo, g.s_hi);
    out << header;
    out.write(reinterpret_cast<const char*>(f.v.data()),
              static_cast<std::streamsize>(f.v.size() * sizeof(complexd)));
    if (!out) throw IoFailure("short write to " + path);
}

Field3 load_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::istringstream hs(line);
    std::string magic;
    Grid3 g;
    hs >> magic >> g.band_n >> g.nz >> g.ny >> g.ns >> g.z_lo >> g.z_hi >> g.y_lo >> g.y_hi >>
        g.s_lo >> g.s_hi;
    if (magic != "ucbgrid") throw IoFailure("bad field header in " + path);
    Field3 f(g);
    in.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(complexd)));
    if (!in) throw IoFailure("short read from " + path);
    return f;
}

void dump_field_slice_csv(const Field3& f, int i, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open " + path);
    out << "y,s,re,im\n";
    const Grid3& g = f.grid;
    char buf[128];
    for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.ns; ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", g.y(j), g.s(k),
                          f.at(i, j, k).real(), f.at(i, j, k).imag());
            out << buf;
        }
}

void dump_surface_csv(const InterferenceSurface& surf, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open " + path);
    out << "# surface " << surf.n << " " << surf.ny << " " << surf.ns << " " << surf.y_lo << " "
        << surf.y_hi << " " << surf.s_lo << " " << surf.s_hi << "\n";
    out << "ybar,s,s_n,residual\n";
    char buf[128];
    for (int j = 0; j < surf.ny; ++j)
        for (int k = 0; k < surf.ns; ++k) {
            const double y = surf.y_lo + (surf.y_hi - surf.y_lo) * j / std::max(1, surf.ny - 1);
            const double s = surf.s_lo + (surf.s_hi - surf.s_lo) * k / std::max(1, surf.ns - 1);
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", y, s, surf.at(j, k),
                          surf.max_residual_over_Bn);
            out << buf;
        }
}

InterferenceSurface load_surface_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path);
    std::string line;
    std::getline(in, line);
    InterferenceSurface surf;
    {
        std::istringstream hs(line);
        std::string hash, word;
        hs >> hash >> word >> surf.n >> surf.ny >> surf.ns >> surf.y_lo >> surf.y_hi >>
            surf.s_lo >> surf.s_hi;
        if (hash != "#" || word != "surface") throw IoFailure("bad surface header in " + path);
    }
    std::getline(in, line);  // column header
    surf.sn.resize(static_cast<size_t>(surf.ny) * surf.ns);
    surf.B_n = interference_scale(surf.n);
    for (int j = 0; j < surf.ny; ++j)
        for (int k = 0; k < surf.ns; ++k) {
            if (!std::getline(in, line)) throw IoFailure("surface file truncated: " + path);
            double y, s, v, r;
            if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg", &y, &s, &v, &r) != 4)
                throw IoFailure("bad surface row: " + line);
            surf.sn[static_cast<size_t>(j) * surf.ns + k] = v;
            surf.max_residual_over_Bn = r;
        }
    surf.fit_from_raw();
    return surf;
}

namespace {

std::string check_node(const nlohmann::json& value, const nlohmann::json& schema,
                       const std::string& where) {
    const std::string type = schema.value("type", "");
    if (type == "object") {
        if (!value.is_object()) return where + ": expected object";
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!value.contains(key.get<std::string>()))
                    return where + ": missing required key " + key.get<std::string>();
        if (schema.contains("properties"))
            for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it)
                if (value.contains(it.key())) {
                    const std::string r = check_node(value[it.key()], it.value(),
                                                     where + "." + it.key());
                    if (!r.empty()) return r;
                }
    } else if (type == "array") {
        if (!value.is_array()) return where + ": expected array";
        if (schema.contains("items"))
            for (size_t i = 0; i < value.size(); ++i) {
                const std::string r =
                    check_node(value[i], schema["items"], where + "[" + std::to_string(i) + "]");
                if (!r.empty()) return r;
            }
    } else if (type == "number") {
        if (!value.is_number()) return where + ": expected number";
    } else if (type == "integer") {
        if (!value.is_number_integer()) return where + ": expected integer";
    } else if (type == "string") {
        if (!value.is_string()) return where + ": expected string";
    } else if (type == "boolean") {
        if (!value.is_boolean()) return where + ": expected boolean";
    }
    return "";
}

}  // namespace

std::string validate_against_schema(const std::string& json_text, const std::string& schema_text) {
    nlohmann::json value = nlohmann::json::parse(json_text);
    nlohmann::json schema = nlohmann::json::parse(schema_text);
    return check_node(value, schema, "$");
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open " + path);
    out << content;
    if (!out) throw IoFailure("short write to " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace ucb
