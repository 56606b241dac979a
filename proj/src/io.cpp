#include "tdbs/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "tdbs/errors.hpp"

namespace tdbs {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void malformed(const std::string& path, std::size_t line,
                            const std::string& what) {
  throw MalformedInputError(path + ":" + std::to_string(line) + ": " + what);
}

struct PlyProperty {
  std::string name;
  bool is_double = false;  // else float32
};

struct PlyHeader {
  bool binary = false;
  std::size_t vertex_count = 0;
  std::size_t face_count = 0;
  std::vector<PlyProperty> vertex_props;
  std::size_t header_lines = 0;
};

bool is_scalar_float(const std::string& t) {
  return t == "float" || t == "float32" || t == "double" || t == "float64";
}

PlyHeader parse_ply_header(std::istream& in, const std::string& path) {
  PlyHeader h;
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> std::string& {
    if (!std::getline(in, line)) malformed(path, lineno, "unexpected end of header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lineno;
    return line;
  };
  if (next() != "ply") malformed(path, lineno, "missing ply magic");
  enum { kNone, kVertex, kFace } element = kNone;
  bool saw_format = false;
  while (true) {
    next();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        h.binary = false;
      } else if (fmt == "binary_little_endian") {
        h.binary = true;
      } else {
        throw UnsupportedFeatureError(path + ": unsupported PLY format " + fmt);
      }
      saw_format = true;
    } else if (tok == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      if (name == "vertex") {
        element = kVertex;
        h.vertex_count = count;
      } else if (name == "face") {
        element = kFace;
        h.face_count = count;
      } else {
        throw UnsupportedFeatureError(path + ": unsupported PLY element " + name);
      }
    } else if (tok == "property") {
      std::string type;
      ls >> type;
      if (element == kVertex) {
        if (!is_scalar_float(type)) {
          throw UnsupportedFeatureError(path + ": unsupported vertex property type " + type);
        }
        PlyProperty p;
        ls >> p.name;
        p.is_double = (type == "double" || type == "float64");
        static const char* known[] = {"x", "y", "z", "nx", "ny", "nz"};
        if (std::find(std::begin(known), std::end(known), p.name) ==
            std::end(known)) {
          throw UnsupportedFeatureError(path + ": unsupported vertex property " + p.name);
        }
        h.vertex_props.push_back(p);
      } else if (element == kFace) {
        if (type != "list") {
          throw UnsupportedFeatureError(path + ": face property must be a list");
        }
        std::string count_t, index_t;
        ls >> count_t >> index_t;
        if (count_t != "uchar" && count_t != "uint8") {
          throw UnsupportedFeatureError(path + ": unsupported face count type " + count_t);
        }
        if (index_t != "int" && index_t != "int32" && index_t != "uint" &&
            index_t != "uint32") {
          throw UnsupportedFeatureError(path + ": unsupported face index type " + index_t);
        }
      } else {
        malformed(path, lineno, "property before any element");
      }
    } else if (tok == "end_header") {
      break;
    } else {
      throw UnsupportedFeatureError(path + ": unsupported PLY header entry " + tok);
    }
  }
  if (!saw_format) malformed(path, lineno, "missing format line");
  bool has[3] = {false, false, false};
  for (const auto& p : h.vertex_props) {
    if (p.name == "x") has[0] = true;
    if (p.name == "y") has[1] = true;
    if (p.name == "z") has[2] = true;
  }
  if (h.vertex_count > 0 && !(has[0] && has[1] && has[2])) {
    malformed(path, lineno, "vertex element lacks x/y/z properties");
  }
  h.header_lines = lineno;
  return h;
}

bool ply_has_normals(const PlyHeader& h) {
  int n = 0;
  for (const auto& p : h.vertex_props) {
    if (p.name == "nx" || p.name == "ny" || p.name == "nz") ++n;
  }
  return n == 3;
}

PointCloud load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedInputError(path + ": cannot open file");
  PlyHeader h = parse_ply_header(in, path);
  PointCloud cloud;
  cloud.id = path;
  cloud.points.reserve(h.vertex_count);
  const bool normals = ply_has_normals(h);
  if (normals) cloud.normals.reserve(h.vertex_count);

  if (!h.binary) {
    std::string line;
    std::size_t lineno = h.header_lines;
    for (std::size_t v = 0; v < h.vertex_count; ++v) {
      if (!std::getline(in, line)) {
        malformed(path, lineno + 1,
                  "declared " + std::to_string(h.vertex_count) +
                      " vertices but found " + std::to_string(v));
      }
      ++lineno;
      std::istringstream ls(line);
      Vec3 p = Vec3::Zero(), n = Vec3::Zero();
      for (const auto& prop : h.vertex_props) {
        double value;
        if (!(ls >> value)) malformed(path, lineno, "bad vertex record");
        if (prop.name == "x") p[0] = value;
        else if (prop.name == "y") p[1] = value;
        else if (prop.name == "z") p[2] = value;
        else if (prop.name == "nx") n[0] = value;
        else if (prop.name == "ny") n[1] = value;
        else if (prop.name == "nz") n[2] = value;
      }
      cloud.points.push_back(p);
      if (normals) cloud.normals.push_back(n);
    }
    for (std::size_t f = 0; f < h.face_count; ++f) {
      if (!std::getline(in, line)) {
        malformed(path, lineno + 1,
                  "declared " + std::to_string(h.face_count) +
                      " faces but found " + std::to_string(f));
      }
      ++lineno;
      std::istringstream ls(line);
      int count;
      if (!(ls >> count)) malformed(path, lineno, "bad face record");
      if (count != 3) {
        throw UnsupportedFeatureError(path + ": only triangular faces supported");
      }
      std::array<int, 3> tri;
      for (int& t : tri) {
        if (!(ls >> t)) malformed(path, lineno, "bad face record");
      }
      cloud.faces.push_back(tri);
    }
  } else {
    auto read_raw = [&](void* dst, std::size_t bytes, const char* what) {
      if (!in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes))) {
        throw MalformedInputError(path + ": byte offset " +
                                  std::to_string(in.tellg() == -1
                                                     ? static_cast<long long>(0)
                                                     : static_cast<long long>(in.tellg())) +
                                  ": truncated " + what);
      }
    };
    for (std::size_t v = 0; v < h.vertex_count; ++v) {
      Vec3 p = Vec3::Zero(), n = Vec3::Zero();
      for (const auto& prop : h.vertex_props) {
        double value;
        if (prop.is_double) {
          read_raw(&value, 8, "vertex data");
        } else {
          float f;
          read_raw(&f, 4, "vertex data");
          value = f;
        }
        if (prop.name == "x") p[0] = value;
        else if (prop.name == "y") p[1] = value;
        else if (prop.name == "z") p[2] = value;
        else if (prop.name == "nx") n[0] = value;
        else if (prop.name == "ny") n[1] = value;
        else if (prop.name == "nz") n[2] = value;
      }
      cloud.points.push_back(p);
      if (normals) cloud.normals.push_back(n);
    }
    for (std::size_t f = 0; f < h.face_count; ++f) {
      std::uint8_t count;
      read_raw(&count, 1, "face data");
      if (count != 3) {
        throw UnsupportedFeatureError(path + ": only triangular faces supported");
      }
      std::array<int, 3> tri;
      for (int& t : tri) {
        std::int32_t idx;
        read_raw(&idx, 4, "face data");
        t = idx;
      }
      cloud.faces.push_back(tri);
    }
  }
  if (cloud.points.empty()) throw EmptyInputError(path + ": empty cloud");
  cloud.validate();
  return cloud;
}

PointCloud load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInputError(path + ": cannot open file");
  PointCloud cloud;
  cloud.id = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "v") {
      Vec3 p;
      if (!(ls >> p[0] >> p[1] >> p[2])) malformed(path, lineno, "bad v record");
      cloud.points.push_back(p);
    } else if (tok == "f") {
      std::vector<int> verts;
      std::string ref;
      while (ls >> ref) {
        // Vertex reference may be v, v/vt, v//vn, v/vt/vn; only v is used.
        std::size_t slash = ref.find('/');
        std::string head = slash == std::string::npos ? ref : ref.substr(0, slash);
        int idx;
        try {
          idx = std::stoi(head);
        } catch (const std::exception&) {
          malformed(path, lineno, "bad f record");
        }
        if (idx < 1) {
          throw UnsupportedFeatureError(path + ": negative/zero OBJ indices unsupported");
        }
        verts.push_back(idx - 1);
      }
      if (verts.size() != 3) {
        throw UnsupportedFeatureError(path + ":" + std::to_string(lineno) +
                                      ": only triangular faces supported");
      }
      cloud.faces.push_back({verts[0], verts[1], verts[2]});
    }
    // other records (vn, vt, comments, groups) are ignored
  }
  if (cloud.points.empty()) throw EmptyInputError(path + ": empty cloud");
  cloud.validate();
  return cloud;
}

PointCloud load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInputError(path + ": cannot open file");
  PointCloud cloud;
  cloud.id = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p[0])) continue;  // blank line
    if (!(ls >> p[1] >> p[2])) malformed(path, lineno, "expected three coordinates");
    cloud.points.push_back(p);
  }
  if (cloud.points.empty()) throw EmptyInputError(path + ": empty cloud");
  cloud.validate();
  return cloud;
}

}  // namespace

CloudFormat format_from_path(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : lower(path.substr(dot + 1));
  if (ext == "ply") return CloudFormat::kPly;
  if (ext == "obj") return CloudFormat::kObj;
  if (ext == "xyz") return CloudFormat::kXyz;
  throw ParameterError(path + ": cannot infer format from extension");
}

PointCloud load_cloud(const std::string& path, CloudFormat format) {
  switch (format) {
    case CloudFormat::kPly: return load_ply(path);
    case CloudFormat::kObj: return load_obj(path);
    case CloudFormat::kXyz: return load_xyz(path);
  }
  throw ParameterError("unknown format");
}

PointCloud load_cloud(const std::string& path) {
  return load_cloud(path, format_from_path(path));
}

void save_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError(path + ": cannot open for writing");
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << cloud.points.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_normals()) {
    out << "property double nx\nproperty double ny\nproperty double nz\n";
  }
  if (cloud.has_faces()) {
    out << "element face " << cloud.faces.size() << "\n";
    out << "property list uchar int vertex_indices\n";
  }
  out << "end_header\n";
  auto write_vec = [&](const Vec3& v) {
    double buf[3] = {v[0], v[1], v[2]};
    out.write(reinterpret_cast<const char*>(buf), sizeof buf);
  };
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    write_vec(cloud.points[i]);
    if (cloud.has_normals()) write_vec(cloud.normals[i]);
  }
  for (const auto& tri : cloud.faces) {
    const std::uint8_t count = 3;
    out.write(reinterpret_cast<const char*>(&count), 1);
    std::int32_t idx[3] = {tri[0], tri[1], tri[2]};
    out.write(reinterpret_cast<const char*>(idx), sizeof idx);
  }
  if (!out) throw Error(path + ": write failure");
}

}  // namespace tdbs
