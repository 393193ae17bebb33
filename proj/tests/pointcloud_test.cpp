#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hazmap/kdtree.hpp"
#include "hazmap/normals.hpp"
#include "hazmap/point_cloud.hpp"
#include "hazmap/point_cloud_io.hpp"

using hazmap::LabeledCloud;
using hazmap::PointCloud;
using hazmap::Vec3;

namespace {

std::string temp_path(const std::string& name) { return testing::TempDir() + name; }

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    ASSERT_TRUE(out.is_open());
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    EXPECT_TRUE(in.is_open());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

PointCloud grid_cloud(int nx, int ny, double spacing, double z = 0.0) {
    PointCloud cloud;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            cloud.vertices.emplace_back(i * spacing, j * spacing, z);
    return cloud;
}

// Exhaustive k-NN with the same tie rule (smaller index wins at equal range).
std::vector<uint32_t> brute_knn(const PointCloud& cloud, std::size_t j, std::size_t k) {
    std::vector<std::pair<double, uint32_t>> all;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (i == j) continue;
        all.emplace_back((cloud.vertices[i] - cloud.vertices[j]).squaredNorm(),
                         static_cast<uint32_t>(i));
    }
    std::sort(all.begin(), all.end());
    std::vector<uint32_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
    return out;
}

}  // namespace

TEST(LoadCloud, ThreeLineXyz) {
    const auto path = temp_path("three.xyz");
    write_file(path, "1 2 3\n4 5 6\n7 8 9\n");
    const PointCloud cloud = hazmap::load_xyz(path);
    ASSERT_EQ(cloud.size(), 3u);
    EXPECT_EQ(cloud.vertices[1], Vec3(4, 5, 6));
}

TEST(LoadCloud, MalformedLineReportsLineNumber) {
    const auto path = temp_path("bad.xyz");
    write_file(path, "1 2 3\na b c\n");
    try {
        hazmap::load_xyz(path);
        FAIL() << "expected parse error";
    } catch (const std::exception& e) {
        EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
    }
}

TEST(LoadCloud, EmptyFileRejected) {
    const auto path = temp_path("empty.xyz");
    write_file(path, "\n\n");
    EXPECT_THROW(hazmap::load_xyz(path), std::runtime_error);
}

TEST(LoadCloud, AsciiRoundTripIsStable) {
    PointCloud cloud;
    std::mt19937_64 eng(314);
    std::uniform_real_distribution<double> u(-40.0, 40.0);
    for (int i = 0; i < 64; ++i) cloud.vertices.emplace_back(u(eng), u(eng), u(eng) * 1e-3);

    const auto first = temp_path("round1.xyz");
    const auto second = temp_path("round2.xyz");
    hazmap::save_xyz(cloud, first);
    const PointCloud reloaded = hazmap::load_xyz(first);
    hazmap::save_xyz(reloaded, second);
    EXPECT_EQ(read_file(first), read_file(second));
}

TEST(LoadCloud, LabeledRoundTrip) {
    LabeledCloud lc;
    lc.cloud.vertices = {Vec3(0, 0, 0), Vec3(1.25, -2.5, 0.125)};
    lc.labels = {0, 1};
    const auto path = temp_path("pair.lxyz");
    hazmap::save_labeled_xyz(lc, path);
    const LabeledCloud back = hazmap::load_labeled_xyz(path);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.labels, lc.labels);
    EXPECT_EQ(back.cloud.vertices[1], lc.cloud.vertices[1]);
}

TEST(LoadCloud, LabeledRejectsNonBinaryLabel) {
    const auto path = temp_path("badlabel.lxyz");
    write_file(path, "0 0 0 2\n");
    EXPECT_THROW(hazmap::load_labeled_xyz(path), std::runtime_error);
}

TEST(LoadCloud, PlyAsciiIgnoresExtraProperties) {
    const auto path = temp_path("tri.ply");
    write_file(path,
               "ply\n"
               "format ascii 1.0\n"
               "comment fixture\n"
               "element vertex 3\n"
               "property float x\n"
               "property float y\n"
               "property float z\n"
               "property float intensity\n"
               "end_header\n"
               "0 0 0 7\n"
               "1 0 0 7\n"
               "0 1 0.5 7\n");
    const PointCloud cloud = hazmap::load_cloud(path, hazmap::CloudFormat::PlyAscii);
    ASSERT_EQ(cloud.size(), 3u);
    EXPECT_EQ(cloud.vertices[2], Vec3(0, 1, 0.5));
}

TEST(NeighborGraph, TwoPointsListEachOther) {
    PointCloud cloud;
    cloud.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    const auto graph = hazmap::build_neighbor_graph(cloud, 1);
    EXPECT_EQ(graph.neighbors[0], std::vector<uint32_t>{1});
    EXPECT_EQ(graph.neighbors[1], std::vector<uint32_t>{0});
}

TEST(NeighborGraph, KEqualToSizeRejected) {
    PointCloud cloud;
    cloud.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
    EXPECT_THROW(hazmap::build_neighbor_graph(cloud, 3), std::invalid_argument);
}

TEST(NeighborGraph, MatchesBruteForceOnRandomCloud) {
    PointCloud cloud;
    std::mt19937_64 eng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) cloud.vertices.emplace_back(u(eng), u(eng), u(eng));

    const auto graph = hazmap::build_neighbor_graph(cloud, 8);
    ASSERT_EQ(graph.neighbors.size(), cloud.size());
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        ASSERT_EQ(graph.neighbors[j].size(), 8u);
        EXPECT_EQ(graph.neighbors[j], brute_knn(cloud, j, 8)) << "vertex " << j;
    }
}

TEST(NeighborGraph, TiesBrokenByLowerIndexOnExactGrid) {
    const PointCloud cloud = grid_cloud(6, 6, 1.0);
    const auto graph = hazmap::build_neighbor_graph(cloud, 5);
    for (std::size_t j = 0; j < cloud.size(); ++j)
        EXPECT_EQ(graph.neighbors[j], brute_knn(cloud, j, 5)) << "vertex " << j;
}

TEST(NeighborGraph, DistancesNonDecreasingAndSelfExcluded) {
    PointCloud cloud;
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) cloud.vertices.emplace_back(u(eng), u(eng), u(eng));
    const auto graph = hazmap::build_neighbor_graph(cloud, 6);
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        double prev = -1.0;
        for (uint32_t idx : graph.neighbors[j]) {
            EXPECT_NE(idx, j);
            const double d = (cloud.vertices[idx] - cloud.vertices[j]).norm();
            EXPECT_GE(d, prev);
            prev = d;
        }
    }
}

TEST(KdTree, RadiusSearchMatchesLinearScan) {
    std::vector<Vec3> pts;
    std::mt19937_64 eng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 800; ++i) pts.emplace_back(u(eng), u(eng), u(eng));
    const hazmap::KdTree tree(pts);

    const Vec3 query(0.1, -0.2, 0.3);
    const double radius = 0.4;
    auto hits = tree.radius_search(query, radius);
    std::vector<uint32_t> got;
    for (const auto& h : hits) got.push_back(h.index);
    std::sort(got.begin(), got.end());

    std::vector<uint32_t> expected;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if ((pts[i] - query).norm() <= radius) expected.push_back(static_cast<uint32_t>(i));
    EXPECT_EQ(got, expected);
}

TEST(FaceNormal, RightHandRule) {
    const Vec3 n = hazmap::face_normal(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0));
    EXPECT_NEAR((n - Vec3(0, 0, 1)).norm(), 0.0, 1e-12);
}

TEST(FaceNormal, CollinearTripleRejected) {
    EXPECT_THROW(hazmap::face_normal(Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2)),
                 std::invalid_argument);
}

TEST(FaceNormal, MatchesDirectCrossProduct) {
    std::mt19937_64 eng(23);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 a(u(eng), u(eng), u(eng));
        const Vec3 b(u(eng), u(eng), u(eng));
        const Vec3 c(u(eng), u(eng), u(eng));
        const Vec3 cross = (b - a).cross(c - a);
        if (cross.norm() < 1e-6) continue;
        const Vec3 n = hazmap::face_normal(a, b, c);
        EXPECT_NEAR((n - cross.normalized()).norm(), 0.0, 1e-12);
    }
}

TEST(PointNormals, FlatGridAllUpward) {
    PointCloud cloud = grid_cloud(20, 20, 0.1);
    cloud.sensor_origin = Vec3(1, 1, 10);
    const auto graph = hazmap::build_neighbor_graph(cloud, 8);
    const auto field = hazmap::estimate_point_normals(cloud, graph);
    ASSERT_EQ(field.size(), cloud.size());
    for (const Vec3& n : field.normals) EXPECT_NEAR((n - Vec3(0, 0, 1)).norm(), 0.0, 1e-6);
}

TEST(PointNormals, UnitLengthEverywhere) {
    PointCloud cloud;
    std::mt19937_64 eng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 400; ++i) {
        const double x = u(eng), y = u(eng);
        cloud.vertices.emplace_back(x, y, 0.3 * std::sin(3 * x) * std::cos(2 * y));
    }
    cloud.sensor_origin = Vec3(0, 0, 20);
    const auto field =
        hazmap::estimate_point_normals(cloud, hazmap::build_neighbor_graph(cloud, 10));
    for (const Vec3& n : field.normals) EXPECT_NEAR(n.norm(), 1.0, 1e-9);
}

TEST(PointNormals, SphereSamplesPointTowardInteriorSensor) {
    PointCloud cloud;
    const int m = 500;
    for (int i = 0; i < m; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / m;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = 2.399963229728653 * i;  // golden angle spiral
        cloud.vertices.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    cloud.sensor_origin = Vec3::Zero();
    const auto field =
        hazmap::estimate_point_normals(cloud, hazmap::build_neighbor_graph(cloud, 8));
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        const Vec3 toward = cloud.sensor_origin - cloud.vertices[j];
        EXPECT_GE(field.normals[j].dot(toward), 0.0) << "vertex " << j;
    }
}

TEST(PointNormals, SaddleMatchesAnalyticGradient) {
    PointCloud cloud;
    for (double x = -1.0; x <= 1.0001; x += 0.05)
        for (double y = -1.0; y <= 1.0001; y += 0.05)
            cloud.vertices.emplace_back(x, y, x * x - y * y);
    cloud.sensor_origin = Vec3(0, 0, 50);
    const auto field =
        hazmap::estimate_point_normals(cloud, hazmap::build_neighbor_graph(cloud, 8));

    for (std::size_t j = 0; j < cloud.size(); ++j) {
        const Vec3& v = cloud.vertices[j];
        if (std::abs(v.x()) > 0.7 || std::abs(v.y()) > 0.7) continue;  // skip boundary
        const Vec3 analytic = Vec3(-2 * v.x(), 2 * v.y(), 1).normalized();
        const double cosang = std::clamp(field.normals[j].dot(analytic), -1.0, 1.0);
        EXPECT_LE(std::acos(cosang), 0.05) << "vertex " << j;
    }
}

TEST(Downsample, FullRatioIsIdentity) {
    PointCloud cloud = grid_cloud(5, 5, 1.0);
    const PointCloud out = hazmap::downsample(cloud, 1.0, 3);
    ASSERT_EQ(out.size(), cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_EQ(out.vertices[i], cloud.vertices[i]);
}

TEST(Downsample, CountIsRoundedShare) {
    PointCloud cloud;
    for (int i = 0; i < 10000; ++i) cloud.vertices.emplace_back(i, 0, 0);
    EXPECT_EQ(hazmap::downsample(cloud, 0.05, 1).size(), 500u);
    EXPECT_EQ(hazmap::downsample(cloud, 0.333, 1).size(), 3330u);
}

TEST(Downsample, SameSeedSameSubset) {
    PointCloud cloud;
    std::mt19937_64 eng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) cloud.vertices.emplace_back(u(eng), u(eng), u(eng));
    const PointCloud a = hazmap::downsample(cloud, 0.25, 77);
    const PointCloud b = hazmap::downsample(cloud, 0.25, 77);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.vertices[i], b.vertices[i]);
    const PointCloud c = hazmap::downsample(cloud, 0.25, 78);
    bool differs = c.size() != a.size();
    for (std::size_t i = 0; !differs && i < a.size(); ++i)
        differs = a.vertices[i] != c.vertices[i];
    EXPECT_TRUE(differs);
}

TEST(Downsample, LabelsStayPairedWithVertices) {
    LabeledCloud lc;
    for (int i = 0; i < 1000; ++i) {
        lc.cloud.vertices.emplace_back(i, 2 * i, 3 * i);
        lc.labels.push_back(i % 3 == 0 ? 1 : 0);
    }
    const LabeledCloud out = hazmap::downsample(lc, 0.4, 12);
    ASSERT_EQ(out.size(), 400u);
    ASSERT_EQ(out.labels.size(), 400u);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int orig = static_cast<int>(out.cloud.vertices[i].x());
        EXPECT_EQ(out.labels[i], orig % 3 == 0 ? 1 : 0);
    }
}

TEST(Downsample, RatioOutOfRangeRejected) {
    PointCloud cloud = grid_cloud(3, 3, 1.0);
    EXPECT_THROW(hazmap::downsample(cloud, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(hazmap::downsample(cloud, 1.5, 1), std::invalid_argument);
}
