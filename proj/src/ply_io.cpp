#include "gsa/ply_io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "gsa/error.hpp"

static_assert(std::endian::native == std::endian::little, "PLY codec assumes a little-endian host");

namespace gsa {

namespace {

// Zeroth-order SH basis constant; f_dc stores (colour - 0.5) / C0.
constexpr double kShC0 = 0.28209479177387814;
constexpr double kMaxLogit = 30.0;
constexpr int kFixedPointRounds = 8;

constexpr std::array<const char*, 14> kRequired = {
    "x",       "y",       "z",       "f_dc_0",  "f_dc_1",  "f_dc_2",  "opacity",
    "scale_0", "scale_1", "scale_2", "rot_0",   "rot_1",   "rot_2",   "rot_3"};
constexpr std::array<const char*, 3> kFeature = {"f_feat_0", "f_feat_1", "f_feat_2"};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
  return std::clamp(std::log(p) - std::log1p(-p), -kMaxLogit, kMaxLogit);
}

double color_from_dc(double f) { return std::clamp(0.5 + kShC0 * f, 0.0, 1.0); }
double dc_from_color(double c) { return (c - 0.5) / kShC0; }

// Float encoding of v that survives decode -> encode unchanged.
template <class Encode, class Decode>
float stable_float(double v, Encode enc, Decode dec) {
  float f = static_cast<float>(enc(v));
  for (int i = 0; i < kFixedPointRounds; ++i) {
    const float g = static_cast<float>(enc(dec(static_cast<double>(f))));
    if (g == f) break;
    f = g;
  }
  return f;
}

struct PackedShape {
  std::array<float, 4> rot;
  std::array<float, 3> scale;
  bool operator==(const PackedShape&) const = default;
};

Quat unpack_rotation(const std::array<float, 4>& r) {
  return Quat(r[0], r[1], r[2], r[3]).normalized();
}

Vec3 unpack_scale(const std::array<float, 3>& s) { return Vec3(s[0], s[1], s[2]); }

PackedShape pack(const CovarianceFactors& f) {
  const Quat q = canonical_quaternion(f.rotation);
  return PackedShape{{static_cast<float>(q.w()), static_cast<float>(q.x()), static_cast<float>(q.y()),
                      static_cast<float>(q.z())},
                     {static_cast<float>(f.log_scale[0]), static_cast<float>(f.log_scale[1]),
                      static_cast<float>(f.log_scale[2])}};
}

// Iterate pack -> reconstruct -> decompose until the packed floats repeat, so
// that re-encoding a decoded model reproduces the same bytes.
PackedShape stable_shape(const Mat3& covariance) {
  PackedShape p = pack(decompose_covariance(covariance));
  for (int i = 0; i < kFixedPointRounds; ++i) {
    const Mat3 rebuilt = covariance_from_factors(unpack_rotation(p.rot), unpack_scale(p.scale));
    const PackedShape next = pack(decompose_covariance(rebuilt));
    if (next == p) break;
    p = next;
  }
  return p;
}

std::optional<Quat> best_proper_basis(const Mat3& v, std::array<int, 3>& order) {
  std::array<int, 3> perm = {0, 1, 2};
  double best_trace = -std::numeric_limits<double>::infinity();
  std::optional<Quat> best;
  do {
    for (int signs = 0; signs < 8; ++signs) {
      Mat3 r;
      for (int k = 0; k < 3; ++k) {
        const double s = (signs >> k) & 1 ? -1.0 : 1.0;
        r.col(k) = s * v.col(perm[k]);
      }
      if (r.determinant() <= 0.0) continue;
      if (r.trace() > best_trace) {
        best_trace = r.trace();
        best = Quat(r);
        order = perm;
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

CovarianceFactors decompose_covariance(const Mat3& covariance) {
  if (!covariance.allFinite()) throw ValidationError("covariance is not finite");
  const Mat3 sym = 0.5 * (covariance + covariance.transpose());
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(sym);
  const Vec3 lambda = eig.eigenvalues();
  if (!(lambda[0] > 0.0)) throw ValidationError("covariance is not positive-definite");
  const Mat3 vecs = eig.eigenvectors();
  const double tol = 1e-9 * lambda[2];

  CovarianceFactors out;
  const bool low_pair = lambda[1] - lambda[0] <= tol;
  const bool high_pair = lambda[2] - lambda[1] <= tol;
  if (low_pair && high_pair) {
    out.log_scale = Vec3::Constant(0.5 * std::log(lambda.mean()));
    return out;
  }
  if (low_pair || high_pair) {
    const int distinct = low_pair ? 2 : 0;
    const double pair = low_pair ? 0.5 * (lambda[0] + lambda[1]) : 0.5 * (lambda[1] + lambda[2]);
    Vec3 u = vecs.col(distinct);
    int axis = 0;
    u.cwiseAbs().maxCoeff(&axis);
    if (u[axis] < 0.0) u = -u;
    const Quat q = Quat::FromTwoVectors(Vec3::Unit(axis), u);
    out.rotation = canonical_quaternion(q);
    out.log_scale = Vec3::Constant(0.5 * std::log(pair));
    out.log_scale[axis] = 0.5 * std::log(lambda[distinct]);
    return out;
  }
  std::array<int, 3> order{};
  const auto q = best_proper_basis(vecs, order);
  out.rotation = canonical_quaternion(*q);
  for (int k = 0; k < 3; ++k) out.log_scale[k] = 0.5 * std::log(lambda[order[k]]);
  return out;
}

Mat3 covariance_from_factors(const Quat& rotation, const Vec3& log_scale) {
  const Mat3 r = rotation.normalized().toRotationMatrix();
  const Vec3 var = (2.0 * log_scale).array().exp().matrix();
  const Mat3 cov = r * var.asDiagonal() * r.transpose();
  return 0.5 * (cov + cov.transpose());
}

namespace {

void put(std::string& out, float v) {
  char b[sizeof(float)];
  std::memcpy(b, &v, sizeof(float));
  out.append(b, sizeof(float));
}

bool metadata_writable(const std::string& key, const std::string& value) {
  auto clean = [](const std::string& s) { return s.find_first_of("\r\n") == std::string::npos; };
  return !key.empty() && key.find_first_of("= \t") == std::string::npos && clean(key) && clean(value);
}

}  // namespace

std::string encode_ply(const GaussianModel& model) {
  validate_model(model);
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n";
  for (const auto& [key, value] : model.metadata) {
    if (metadata_writable(key, value)) header << "comment meta " << key << '=' << value << '\n';
  }
  header << "element vertex " << model.size() << '\n';
  for (const char* name : kRequired) header << "property float " << name << '\n';
  if (model.has_features) {
    for (const char* name : kFeature) header << "property float " << name << '\n';
  }
  header << "end_header\n";

  std::string out = header.str();
  const std::size_t stride = (kRequired.size() + (model.has_features ? 3 : 0)) * sizeof(float);
  out.reserve(out.size() + stride * model.size());
  for (const Gaussian& g : model.gaussians) {
    for (int k = 0; k < 3; ++k) put(out, static_cast<float>(g.position[k]));
    for (int k = 0; k < 3; ++k) put(out, stable_float(g.color_dc[k], dc_from_color, color_from_dc));
    put(out, stable_float(g.opacity, logit, sigmoid));
    const PackedShape shape = stable_shape(g.covariance);
    for (float s : shape.scale) put(out, s);
    for (float r : shape.rot) put(out, r);
    if (model.has_features) {
      for (int k = 0; k < 3; ++k) put(out, static_cast<float>(g.feature[k]));
    }
  }
  return out;
}

namespace {

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<ScalarType> scalar_type(const std::string& name) {
  if (name == "char" || name == "int8") return ScalarType::i8;
  if (name == "uchar" || name == "uint8") return ScalarType::u8;
  if (name == "short" || name == "int16") return ScalarType::i16;
  if (name == "ushort" || name == "uint16") return ScalarType::u16;
  if (name == "int" || name == "int32") return ScalarType::i32;
  if (name == "uint" || name == "uint32") return ScalarType::u32;
  if (name == "float" || name == "float32") return ScalarType::f32;
  if (name == "double" || name == "float64") return ScalarType::f64;
  return std::nullopt;
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::i8:
    case ScalarType::u8: return 1;
    case ScalarType::i16:
    case ScalarType::u16: return 2;
    case ScalarType::i32:
    case ScalarType::u32:
    case ScalarType::f32: return 4;
    case ScalarType::f64: return 8;
  }
  return 0;
}

template <class T>
T load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double read_scalar(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::i8: return load<std::int8_t>(p);
    case ScalarType::u8: return load<std::uint8_t>(p);
    case ScalarType::i16: return load<std::int16_t>(p);
    case ScalarType::u16: return load<std::uint16_t>(p);
    case ScalarType::i32: return load<std::int32_t>(p);
    case ScalarType::u32: return load<std::uint32_t>(p);
    case ScalarType::f32: return load<float>(p);
    case ScalarType::f64: return load<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::f32;
  bool is_list = false;
  ScalarType count_type = ScalarType::u8;
  std::size_t offset = 0;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
  bool has_lists = false;
  std::size_t stride = 0;
};

struct Header {
  std::vector<Element> elements;
  std::map<std::string, std::string> metadata;
  std::size_t data_offset = 0;
};

Header parse_header(std::string_view bytes) {
  Header h;
  std::size_t pos = 0;
  bool seen_format = false;
  int line_no = 0;
  while (true) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw ParseError("unterminated PLY header", bytes.size());
    std::string line(bytes.substr(pos, nl - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t line_start = pos;
    pos = nl + 1;
    ++line_no;

    if (line_no == 1) {
      if (line != "ply") throw ParseError("missing 'ply' magic", 0);
      continue;
    }
    std::istringstream is(line);
    std::string word;
    is >> word;
    if (word.empty()) continue;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt, version;
      is >> fmt >> version;
      if (fmt != "binary_little_endian") {
        throw ParseError("unsupported PLY format '" + fmt + "'", line_start);
      }
      seen_format = true;
    } else if (word == "comment" || word == "obj_info") {
      std::string tag;
      is >> tag;
      if (word == "comment" && tag == "meta") {
        std::string rest;
        std::getline(is >> std::ws, rest);
        const std::size_t eq = rest.find('=');
        if (eq != std::string::npos && eq > 0) h.metadata[rest.substr(0, eq)] = rest.substr(eq + 1);
      }
    } else if (word == "element") {
      Element e;
      long long count = -1;
      is >> e.name >> count;
      if (e.name.empty() || !is || count < 0) throw ParseError("malformed element line", line_start);
      e.count = static_cast<std::size_t>(count);
      h.elements.push_back(std::move(e));
    } else if (word == "property") {
      if (h.elements.empty()) throw ParseError("property before any element", line_start);
      Element& e = h.elements.back();
      Property p;
      std::string type;
      is >> type;
      if (type == "list") {
        std::string count_type, item_type;
        is >> count_type >> item_type >> p.name;
        const auto ct = scalar_type(count_type);
        const auto it = scalar_type(item_type);
        if (!ct || !it || p.name.empty()) throw ParseError("malformed list property", line_start);
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        e.has_lists = true;
      } else {
        const auto t = scalar_type(type);
        is >> p.name;
        if (!t || p.name.empty()) throw ParseError("unknown property type '" + type + "'", line_start);
        p.type = *t;
        p.offset = e.stride;
        e.stride += type_size(p.type);
      }
      e.properties.push_back(std::move(p));
    } else {
      throw ParseError("unexpected header keyword '" + word + "'", line_start);
    }
  }
  if (!seen_format) throw ParseError("PLY header has no format line", pos);
  h.data_offset = pos;
  return h;
}

// Skips one element block that precedes the vertex data.
std::size_t skip_element(std::string_view bytes, std::size_t pos, const Element& e) {
  if (!e.has_lists) {
    const std::size_t need = e.count * e.stride;
    if (bytes.size() - pos < need) throw ParseError("truncated '" + e.name + "' element", bytes.size());
    return pos + need;
  }
  for (std::size_t i = 0; i < e.count; ++i) {
    for (const Property& p : e.properties) {
      if (!p.is_list) {
        pos += type_size(p.type);
      } else {
        const std::size_t cs = type_size(p.count_type);
        if (bytes.size() < pos + cs) throw ParseError("truncated '" + e.name + "' element", bytes.size());
        const double n = read_scalar(p.count_type, bytes.data() + pos);
        if (n < 0) throw ParseError("negative list length", pos);
        pos += cs + static_cast<std::size_t>(n) * type_size(p.type);
      }
      if (pos > bytes.size()) throw ParseError("truncated '" + e.name + "' element", bytes.size());
    }
  }
  return pos;
}

}  // namespace

GaussianModel decode_ply(std::string_view bytes) {
  const Header h = parse_header(bytes);
  std::size_t pos = h.data_offset;
  const Element* vertex = nullptr;
  for (const Element& e : h.elements) {
    if (e.name == "vertex") {
      vertex = &e;
      break;
    }
    pos = skip_element(bytes, pos, e);
  }
  if (!vertex) throw ParseError("no vertex element", h.data_offset);
  if (vertex->has_lists) throw ParseError("list property in vertex element", h.data_offset);

  auto find = [&](const std::string& name) -> const Property* {
    for (const Property& p : vertex->properties) {
      if (p.name == name) return &p;
    }
    return nullptr;
  };
  std::array<const Property*, kRequired.size()> req{};
  for (std::size_t k = 0; k < kRequired.size(); ++k) {
    req[k] = find(kRequired[k]);
    if (!req[k]) {
      throw ParseError(std::string("missing required vertex property '") + kRequired[k] + "'",
                       h.data_offset);
    }
  }
  std::array<const Property*, 3> feat{};
  int feature_count = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    feat[k] = find(kFeature[k]);
    if (feat[k]) ++feature_count;
  }
  if (feature_count != 0 && feature_count != 3) {
    throw ParseError("incomplete f_feat_* channels", h.data_offset);
  }

  if (vertex->count == 0) throw ValidationError("empty model");
  const std::size_t need = vertex->count * vertex->stride;
  if (bytes.size() - pos < need) {
    throw ParseError("truncated vertex data: expected " + std::to_string(need) + " bytes, found " +
                         std::to_string(bytes.size() - pos),
                     bytes.size());
  }

  GaussianModel model;
  model.metadata = h.metadata;
  model.has_features = feature_count == 3;
  model.gaussians.resize(vertex->count);
  std::array<double, kRequired.size()> v{};
  for (std::size_t i = 0; i < vertex->count; ++i) {
    const std::size_t row = pos + i * vertex->stride;
    const char* base = bytes.data() + row;
    for (std::size_t k = 0; k < req.size(); ++k) v[k] = read_scalar(req[k]->type, base + req[k]->offset);
    if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
      throw ParseError("non-finite value in vertex " + std::to_string(i), row);
    }
    Gaussian& g = model.gaussians[i];
    g.position = Vec3(v[0], v[1], v[2]);
    g.color_dc = Vec3(color_from_dc(v[3]), color_from_dc(v[4]), color_from_dc(v[5]));
    g.opacity = sigmoid(v[6]);
    const Quat q(v[10], v[11], v[12], v[13]);
    if (!(q.norm() > 0.0)) throw ParseError("zero quaternion in vertex " + std::to_string(i), row);
    g.covariance = covariance_from_factors(q, Vec3(v[7], v[8], v[9]));
    if (model.has_features) {
      for (int k = 0; k < 3; ++k) {
        const double f = read_scalar(feat[k]->type, base + feat[k]->offset);
        if (!std::isfinite(f)) throw ParseError("non-finite feature in vertex " + std::to_string(i), row);
        g.feature[k] = std::clamp(f, 0.0, 1.0);
      }
    } else {
      g.feature = Vec3::Zero();
    }
  }
  validate_model(model);
  return model;
}

void write_ply(const GaussianModel& model, const std::filesystem::path& path) {
  const std::string bytes = encode_ply(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

GaussianModel read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ply(bytes);
}

}  // namespace gsa
