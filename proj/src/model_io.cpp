#include <cmath>
#include <fstream>
#include <sstream>

#include "lpvmor/json_io.hpp"
#include "lpvmor/model.hpp"

namespace lpvmor {

json matrix_to_json(const Mat& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& where)
{
    if (!j.is_array()) throw Error(where + ": expected an array of rows");
    if (static_cast<Eigen::Index>(j.size()) != rows)
        throw Error("dimension mismatch at " + where + ": " + std::to_string(j.size()) + " rows, expected " +
                    std::to_string(rows));
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw Error("dimension mismatch at " + where + ": row " + std::to_string(i) + " must have " +
                        std::to_string(cols) + " entries");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const json& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw Error("non-finite entry at " + where);
            const double x = v.get<double>();
            if (!std::isfinite(x)) throw Error("non-finite entry at " + where);
            m(i, c) = x;
        }
    }
    return m;
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("parse error in " + path.string() + ": " + e.what());
    }
}

void write_text_file(const std::string& text, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("I/O error: cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw Error("I/O error: failed writing " + path.string());
}

void write_json_file(const json& j, const std::filesystem::path& path) { write_text_file(j.dump(1) + "\n", path); }

namespace {

json points_to_json(const std::vector<GridPoint>& points)
{
    json arr = json::array();
    for (const auto& p : points) {
        arr.push_back({{"rho", p.rho},
                       {"A", matrix_to_json(p.A)},
                       {"B", matrix_to_json(p.B)},
                       {"C", matrix_to_json(p.C)},
                       {"D", matrix_to_json(p.D)}});
    }
    return arr;
}

template <class Model>
json base_json(const Model& m)
{
    return {{"n_x", m.n_x},
            {"n_u", m.n_u},
            {"n_y", m.n_y},
            {"rho_grid", m.rho_grid},
            {"rate_bound", m.rate_bound},
            {"points", points_to_json(m.points)}};
}

template <class Model>
void base_from_json(const json& j, Model& m)
{
    try {
        m.n_x = j.at("n_x").get<int>();
        m.n_u = j.at("n_u").get<int>();
        m.n_y = j.at("n_y").get<int>();
        m.rho_grid = j.at("rho_grid").get<std::vector<double>>();
        m.rate_bound = j.at("rate_bound").get<double>();
    } catch (const json::exception& e) {
        throw Error(std::string("parse error: ") + e.what());
    }
    if (m.n_x < 0 || m.n_u < 0 || m.n_y < 0) throw Error("negative dimension");
    for (std::size_t k = 1; k < m.rho_grid.size(); ++k)
        if (!(m.rho_grid[k] > m.rho_grid[k - 1])) throw Error("non-monotone grid at point " + std::to_string(k));
    const json& pts = j.at("points");
    if (!pts.is_array()) throw Error("parse error: points must be an array");
    m.points.clear();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const json& p = pts[k];
        const std::string at = "point " + std::to_string(k);
        GridPoint g;
        try {
            g.rho = p.at("rho").get<double>();
        } catch (const json::exception& e) {
            throw Error("parse error at " + at + ": " + e.what());
        }
        g.A = matrix_from_json(p.at("A"), m.n_x, m.n_x, at + " matrix A");
        g.B = matrix_from_json(p.at("B"), m.n_x, m.n_u, at + " matrix B");
        g.C = matrix_from_json(p.at("C"), m.n_y, m.n_x, at + " matrix C");
        g.D = matrix_from_json(p.at("D"), m.n_y, m.n_u, at + " matrix D");
        m.points.push_back(std::move(g));
    }
}

} // namespace

GridLpvModel load_model(const std::filesystem::path& path)
{
    const json j = read_json_file(path);
    GridLpvModel m;
    base_from_json(j, m);
    validate(m);
    return m;
}

bool is_reduced_model_file(const std::filesystem::path& path)
{
    const json j = read_json_file(path);
    return j.contains("vertex_points");
}

ReducedLpvModel load_reduced_model(const std::filesystem::path& path)
{
    const json j = read_json_file(path);
    ReducedLpvModel m;
    base_from_json(j, m);
    if (!j.contains("vertex_points")) throw Error("parse error: missing vertex_points");
    for (std::size_t i = 0; i < j.at("vertex_points").size(); ++i) {
        const json& v = j.at("vertex_points")[i];
        VertexPoint vp;
        vp.rho = v.at("rho").get<double>();
        vp.rhodot = v.at("rhodot").get<double>();
        vp.A = matrix_from_json(v.at("A"), m.n_x, m.n_x, "vertex " + std::to_string(i) + " matrix A");
        m.vertex_points.push_back(std::move(vp));
    }
    if (j.contains("meta")) {
        m.unstable_states = j["meta"].value("unstable_states", 0);
        m.integrators = j["meta"].value("integrators", 0);
    }
    validate(m);
    return m;
}

void save_model(const GridLpvModel& model, const std::filesystem::path& path)
{
    validate(model);
    write_json_file(base_json(model), path);
}

void save_model(const ReducedLpvModel& model, const std::filesystem::path& path)
{
    validate(model);
    json j = base_json(model);
    json verts = json::array();
    for (const auto& v : model.vertex_points)
        verts.push_back({{"rho", v.rho}, {"rhodot", v.rhodot}, {"A", matrix_to_json(v.A)}});
    j["vertex_points"] = std::move(verts);
    j["meta"] = {{"unstable_states", model.unstable_states}, {"integrators", model.integrators}};
    write_json_file(j, path);
}

} // namespace lpvmor
