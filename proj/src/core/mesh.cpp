#include "mvdrag/core/mesh.hpp"

#include "mvdrag/core/errors.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace mvdrag {

void clean_faces(TriMesh& mesh) {
    const Eigen::Index nv = mesh.num_vertices();
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(mesh.num_faces()));
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        const Eigen::Vector3i idx = mesh.faces.row(f).transpose();
        for (int k = 0; k < 3; ++k) {
            if (idx(k) < 0 || idx(k) >= nv) {
                throw DataError("face " + std::to_string(f) + " references vertex " + std::to_string(idx(k)) +
                                " of " + std::to_string(nv));
            }
        }
        if (idx(0) == idx(1) || idx(1) == idx(2) || idx(0) == idx(2)) continue;
        const Eigen::Vector3d a = mesh.vertices.row(idx(0)).transpose();
        const Eigen::Vector3d b = mesh.vertices.row(idx(1)).transpose();
        const Eigen::Vector3d c = mesh.vertices.row(idx(2)).transpose();
        if ((b - a).cross(c - a).norm() <= 1e-14) continue;
        keep.push_back(f);
    }
    Eigen::Matrix<int, Eigen::Dynamic, 3> faces(static_cast<Eigen::Index>(keep.size()), 3);
    for (std::size_t k = 0; k < keep.size(); ++k) faces.row(static_cast<Eigen::Index>(k)) = mesh.faces.row(keep[k]);
    mesh.faces = std::move(faces);
}

namespace {

int parse_face_index(const std::string& token, Eigen::Index num_vertices, int line_no) {
    const std::string head = token.substr(0, token.find('/'));
    int idx = 0;
    try {
        idx = std::stoi(head);
    } catch (const std::exception&) {
        throw FormatError("obj line " + std::to_string(line_no) + ": bad face index '" + token + "'");
    }
    if (idx == 0) throw DataError("obj line " + std::to_string(line_no) + ": face index 0 is invalid");
    return idx > 0 ? idx - 1 : static_cast<int>(num_vertices) + idx;
}

} // namespace

TriMesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mesh file " + path.string());

    std::vector<Eigen::Vector3d> verts;
    std::vector<Eigen::Vector3d> cols;
    std::vector<Eigen::Vector3i> tris;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            std::vector<double> vals;
            double x = 0.0;
            while (ss >> x) vals.push_back(x);
            if (vals.size() != 3 && vals.size() != 6 && vals.size() != 4 && vals.size() != 7) {
                throw FormatError("obj line " + std::to_string(line_no) + ": vertex needs 3 or 6 values");
            }
            verts.emplace_back(vals[0], vals[1], vals[2]);
            if (vals.size() >= 6) cols.emplace_back(vals[vals.size() - 3], vals[vals.size() - 2], vals[vals.size() - 1]);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ss >> tok) poly.push_back(parse_face_index(tok, static_cast<Eigen::Index>(verts.size()), line_no));
            if (poly.size() < 3) throw FormatError("obj line " + std::to_string(line_no) + ": face needs 3 indices");
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) tris.emplace_back(poly[0], poly[k], poly[k + 1]);
        }
    }

    TriMesh mesh;
    mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
    if (!cols.empty()) {
        if (cols.size() != verts.size()) throw FormatError("obj vertex colors must be given for every vertex");
        mesh.colors.resize(static_cast<Eigen::Index>(cols.size()), 3);
        for (std::size_t i = 0; i < cols.size(); ++i) mesh.colors.row(static_cast<Eigen::Index>(i)) = cols[i].transpose();
    }
    mesh.faces.resize(static_cast<Eigen::Index>(tris.size()), 3);
    for (std::size_t i = 0; i < tris.size(); ++i) mesh.faces.row(static_cast<Eigen::Index>(i)) = tris[i].transpose();
    if (!mesh.vertices.allFinite()) throw DataError("obj contains non-finite vertex coordinates");
    clean_faces(mesh);
    return mesh;
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write mesh file " + path.string());
    out.precision(9);
    for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) {
        out << "v " << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2);
        if (mesh.has_colors()) out << ' ' << mesh.colors(i, 0) << ' ' << mesh.colors(i, 1) << ' ' << mesh.colors(i, 2);
        out << '\n';
    }
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' ' << mesh.faces(f, 2) + 1 << '\n';
    }
}

Normalization normalize_to_unit_sphere(TriMesh& mesh) {
    Normalization norm;
    if (mesh.num_vertices() == 0) return norm;
    norm.center = mesh.vertices.colwise().mean().transpose();
    const double radius = (mesh.vertices.rowwise() - norm.center.transpose()).rowwise().norm().maxCoeff();
    norm.scale = radius > 0.0 ? 1.0 / radius : 1.0;
    mesh.vertices = ((mesh.vertices.rowwise() - norm.center.transpose()) * norm.scale).eval();
    return norm;
}

} // namespace mvdrag
