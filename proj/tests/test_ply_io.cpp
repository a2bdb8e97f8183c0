#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "gsa/error.hpp"
#include "gsa/ply_io.hpp"
#include "gsa/synth.hpp"
#include "support.hpp"

using namespace gsa;

namespace {

GaussianModel sample_model(std::size_t n = 100, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  GaussianModel m = gsa::testing::random_cloud(rng, n);
  m.metadata["source"] = "unit test";
  return m;
}

// Hand-rolled writer in the layout produced by common splatting trainers:
// normals and higher SH bands present, no feature channels.
std::string third_party_ply(const std::vector<Gaussian>& gs) {
  std::ostringstream out;
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << gs.size() << "\n";
  const char* props[] = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
  for (const char* p : props) out << "property float " << p << "\n";
  for (int i = 0; i < 9; ++i) out << "property float f_rest_" << i << "\n";
  out << "property float opacity\n";
  for (int i = 0; i < 3; ++i) out << "property float scale_" << i << "\n";
  for (int i = 0; i < 4; ++i) out << "property float rot_" << i << "\n";
  out << "end_header\n";
  std::string bytes = out.str();
  auto put = [&](double v) {
    const float f = static_cast<float>(v);
    char buf[4];
    std::memcpy(buf, &f, 4);
    bytes.append(buf, 4);
  };
  for (const Gaussian& g : gs) {
    put(g.position.x());
    put(g.position.y());
    put(g.position.z());
    put(0);
    put(0);
    put(1);
    for (int c = 0; c < 3; ++c) put((g.color_dc[c] - 0.5) / 0.28209479177387814);
    for (int i = 0; i < 9; ++i) put(0.123);
    put(std::log(g.opacity / (1.0 - g.opacity)));
    put(std::log(0.1));
    put(std::log(0.2));
    put(std::log(0.3));
    put(1);
    put(0);
    put(0);
    put(0);
  }
  return bytes;
}

}  // namespace

TEST(PlyIo, RoundTripWithinFloatPrecision) {
  const GaussianModel m = sample_model();
  const GaussianModel back = decode_ply(encode_ply(m));
  ASSERT_EQ(back.size(), m.size());
  EXPECT_TRUE(back.has_features);
  EXPECT_EQ(back.metadata.at("source"), "unit test");
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Gaussian& a = m.gaussians[i];
    const Gaussian& b = back.gaussians[i];
    EXPECT_LT((a.position - b.position).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + a.position.norm()));
    EXPECT_LT((a.covariance - b.covariance).cwiseAbs().maxCoeff(), 1e-6 * a.covariance.norm());
    EXPECT_NEAR(a.opacity, b.opacity, 1e-6);
    EXPECT_LT((a.color_dc - b.color_dc).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((a.feature - b.feature).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(PlyIo, RandomizedRoundTrips) {
  for (std::uint64_t seed = 2; seed < 12; ++seed) {
    const GaussianModel m = sample_model(30, seed);
    const std::string first = encode_ply(m);
    const GaussianModel back = decode_ply(first);
    EXPECT_EQ(back.size(), m.size());
    EXPECT_EQ(encode_ply(back), first);
  }
}

TEST(PlyIo, WritesAreDeterministicAndFixedPoint) {
  const auto dir = gsa::testing::scratch_dir("ply_fixed_point");
  const GaussianModel m = generate_model(ShapeParams{});
  write_ply(m, dir / "a.ply");
  write_ply(m, dir / "b.ply");
  write_ply(read_ply(dir / "a.ply"), dir / "c.ply");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(dir / "a.ply"), slurp(dir / "b.ply"));
  EXPECT_EQ(slurp(dir / "a.ply"), slurp(dir / "c.ply"));
}

TEST(PlyIo, AxisAlignedCovarianceFactors) {
  const CovarianceFactors f = decompose_covariance(Vec3(4, 1, 1).asDiagonal());
  EXPECT_NEAR(f.log_scale[0], std::log(2.0), 1e-6);
  EXPECT_NEAR(f.log_scale[1], 0.0, 1e-6);
  EXPECT_NEAR(f.log_scale[2], 0.0, 1e-6);

  GaussianModel m;
  Gaussian g;
  g.covariance = Vec3(4, 1, 1).asDiagonal();
  m.gaussians.push_back(g);
  const GaussianModel back = decode_ply(encode_ply(m));
  EXPECT_LT((back.gaussians[0].covariance - g.covariance).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(PlyIo, CovarianceFactorsReconstruct) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Mat3 c = gsa::testing::random_spd(rng, 1e-3, 2.0);
    const CovarianceFactors f = decompose_covariance(c);
    EXPECT_LT((covariance_from_factors(f.rotation, f.log_scale) - c).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(decompose_covariance(Vec3(1, -1, 1).asDiagonal()), ValidationError);
}

TEST(PlyIo, MissingFeatureChannelsLoadFeatureless) {
  std::vector<Gaussian> gs(3);
  for (auto& g : gs) g.opacity = 0.5;
  gs[1].position = Vec3(1, 2, 3);
  gs[2].opacity = 0.25;
  const GaussianModel m = decode_ply(third_party_ply(gs));
  ASSERT_EQ(m.size(), 3u);
  EXPECT_FALSE(m.has_features);
  EXPECT_EQ(m.gaussians[0].feature, Vec3::Zero());
  EXPECT_LT((m.gaussians[1].position - Vec3(1, 2, 3)).norm(), 1e-6);
  EXPECT_NEAR(m.gaussians[2].opacity, 0.25, 1e-6);
  EXPECT_LT((m.gaussians[0].covariance - Vec3(0.01, 0.04, 0.09).asDiagonal().toDenseMatrix()).norm(), 1e-7);
  // Writing a featureless model omits the channels again.
  EXPECT_EQ(encode_ply(m).find("f_feat"), std::string::npos);
}

TEST(PlyIo, ZeroVerticesIsAnEmptyModel) {
  const std::string bytes =
      "ply\nformat binary_little_endian 1.0\nelement vertex 0\nproperty float x\nproperty float y\n"
      "property float z\nproperty float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\n"
      "property float opacity\nproperty float scale_0\nproperty float scale_1\nproperty float scale_2\n"
      "property float rot_0\nproperty float rot_1\nproperty float rot_2\nproperty float rot_3\n"
      "end_header\n";
  try {
    decode_ply(bytes);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty model"), std::string::npos);
  }
}

TEST(PlyIo, MalformedInputsReportByteOffsets) {
  const std::string good = encode_ply(sample_model(5));
  const std::string truncated = good.substr(0, good.size() - 7);
  EXPECT_THROW(decode_ply(truncated), ParseError);
  EXPECT_THROW(decode_ply("not a ply file"), ParseError);

  std::string ascii = good;
  ascii.replace(ascii.find("binary_little_endian"), 20, "ascii");
  EXPECT_THROW(decode_ply(ascii), ParseError);

  std::string missing = good;
  const auto pos = missing.find("property float opacity\n");
  missing.erase(pos, std::strlen("property float opacity\n"));
  try {
    decode_ply(missing);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.byte_offset(), 0u);
    EXPECT_NE(std::string(e.what()).find("opacity"), std::string::npos);
  }
}

TEST(PlyIo, HeaderCountMatchesDecodedCount) {
  const GaussianModel m = sample_model(17);
  const std::string bytes = encode_ply(m);
  EXPECT_NE(bytes.find("element vertex 17\n"), std::string::npos);
  EXPECT_EQ(decode_ply(bytes).size(), 17u);
}

TEST(PlyIo, MissingFileIsAnIoError) {
  EXPECT_THROW(read_ply("/nonexistent/model.ply"), IoError);
}
