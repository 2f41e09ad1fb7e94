#include "vemadapt/mesh_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace vemadapt {

using nlohmann::json;

namespace {

json point_json(const Point2& p) { return json::array({p.x(), p.y()}); }

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ParseError(where + ": " + what); }

double number_at(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(where, "non-finite coordinate");
    return v;
}

Point2 point_at(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) fail(where, "expected [x, y]");
    return {number_at(j[0], where + "[0]"), number_at(j[1], where + "[1]")};
}

std::optional<double> optional_at(const json& j, const std::string& where) {
    if (j.is_null()) return std::nullopt;
    return number_at(j, where);
}

}  // namespace

std::string mesh_to_json(const PolyMesh& mesh, int indent) {
    json j;
    j["nodes"] = json::array();
    for (const auto& p : mesh.nodes) j["nodes"].push_back(point_json(p));
    j["elements"] = json::array();
    for (const auto& cyc : mesh.elements) j["elements"].push_back(cyc);
    j["boundary"] = json::array();
    for (const auto& s : mesh.domain.segments) {
        json b;
        b["segment"] = json::array({point_json(s.a), point_json(s.b)});
        b["tag"] = to_string(s.tag);
        const bool dirichlet = s.constrains(0) || s.constrains(1);
        if (dirichlet) {
            json v = json::array();
            for (int c = 0; c < 2; ++c) {
                const auto& val = s.value[static_cast<std::size_t>(c)];
                if (s.constrains(c) && val) v.push_back(*val);
                else v.push_back(nullptr);
            }
            b["value"] = v;
            if (s.has_traction()) b["traction"] = json::array({s.traction.x(), s.traction.y()});
        } else {
            b["value"] = json::array({s.traction.x(), s.traction.y()});
        }
        j["boundary"].push_back(b);
    }
    return j.dump(indent);
}

PolyMesh mesh_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i + 1 < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
    if (!j.is_object()) fail("<root>", "expected an object");

    PolyMesh mesh;
    if (!j.contains("nodes") || !j["nodes"].is_array()) fail("nodes", "missing or not an array");
    const auto& nodes = j["nodes"];
    for (std::size_t i = 0; i < nodes.size(); ++i) mesh.nodes.push_back(point_at(nodes[i], "nodes[" + std::to_string(i) + "]"));

    if (!j.contains("elements") || !j["elements"].is_array()) fail("elements", "missing or not an array");
    const auto& elems = j["elements"];
    if (elems.empty()) fail("elements", "mesh must contain ≥1 element");
    for (std::size_t e = 0; e < elems.size(); ++e) {
        const std::string where = "elements[" + std::to_string(e) + "]";
        if (!elems[e].is_array()) fail(where, "expected an array of node ids");
        std::vector<Index> cyc;
        for (std::size_t k = 0; k < elems[e].size(); ++k) {
            const auto& v = elems[e][k];
            const std::string at = where + "[" + std::to_string(k) + "]";
            if (!v.is_number_integer()) fail(at, "expected an integer node id");
            const Index id = v.get<Index>();
            if (id < 0 || id >= mesh.num_nodes()) fail(at, "references missing node " + std::to_string(id));
            cyc.push_back(id);
        }
        if (cyc.size() < 3) fail(where, "element needs at least 3 vertices");
        mesh.elements.push_back(std::move(cyc));
    }

    std::vector<BoundarySegment> segs;
    if (j.contains("boundary")) {
        const auto& bnd = j["boundary"];
        if (!bnd.is_array()) fail("boundary", "expected an array");
        for (std::size_t k = 0; k < bnd.size(); ++k) {
            const std::string where = "boundary[" + std::to_string(k) + "]";
            const auto& b = bnd[k];
            if (!b.is_object() || !b.contains("segment") || !b.contains("tag")) fail(where, "expected {segment, tag, value}");
            const auto& sj = b["segment"];
            if (!sj.is_array() || sj.size() != 2) fail(where + ".segment", "expected two points");
            BoundarySegment s;
            s.a = point_at(sj[0], where + ".segment[0]");
            s.b = point_at(sj[1], where + ".segment[1]");
            if (!b["tag"].is_string()) fail(where + ".tag", "expected a string");
            try {
                s.tag = boundary_tag_from_string(b["tag"].get<std::string>());
            } catch (const ParseError& e) {
                fail(where + ".tag", e.what());
            }
            const bool dirichlet = s.constrains(0) || s.constrains(1);
            if (b.contains("value")) {
                const auto& v = b["value"];
                if (!v.is_array() || v.size() != 2) fail(where + ".value", "expected two entries");
                if (dirichlet) {
                    for (int c = 0; c < 2; ++c) {
                        const auto val = optional_at(v[static_cast<std::size_t>(c)], where + ".value[" + std::to_string(c) + "]");
                        if (s.constrains(c)) {
                            if (!val) fail(where + ".value", "constrained component needs a number");
                            s.value[static_cast<std::size_t>(c)] = val;
                        }
                    }
                } else {
                    s.traction = point_at(v, where + ".value");
                }
            } else if (dirichlet) {
                fail(where, "Dirichlet segment needs a value");
            }
            if (b.contains("traction")) s.traction = point_at(b["traction"], where + ".traction");
            segs.push_back(s);
        }
    }
    mesh.domain = DomainSpec::from_segments(std::move(segs));
    return mesh;
}

void write_mesh(const PolyMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << mesh_to_json(mesh) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

PolyMesh read_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return mesh_from_json(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace vemadapt
