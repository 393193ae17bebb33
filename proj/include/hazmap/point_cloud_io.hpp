#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hazmap/point_cloud.hpp"

namespace hazmap {

enum class CloudFormat { XyzAscii, PlyAscii, LabeledXyz };

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool parse_double(std::string_view tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

[[noreturn]] inline void parse_fail(const std::string& path, std::size_t line_no,
                                    const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

/// Formats a double with 9 significant digits; round-trips through one
/// save/load cycle to a fixpoint.
inline void append_g9(std::string& out, double v) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof(buf), "%.9g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace detail

/// Reads "x y z" per line.
inline PointCloud load_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    PointCloud cloud;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != 3) detail::parse_fail(path, line_no, "expected 3 fields");
        Vec3 v;
        for (int c = 0; c < 3; ++c)
            if (!detail::parse_double(toks[c], v[c]))
                detail::parse_fail(path, line_no, "bad number '" + std::string(toks[c]) + "'");
        cloud.vertices.push_back(v);
    }
    if (cloud.empty()) throw std::runtime_error(path + ": empty point cloud");
    return cloud;
}

/// Reads "x y z L" per line, L in {0, 1}.
inline LabeledCloud load_labeled_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    LabeledCloud out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != 4) detail::parse_fail(path, line_no, "expected 4 fields");
        Vec3 v;
        for (int c = 0; c < 3; ++c)
            if (!detail::parse_double(toks[c], v[c]))
                detail::parse_fail(path, line_no, "bad number '" + std::string(toks[c]) + "'");
        if (toks[3] != "0" && toks[3] != "1")
            detail::parse_fail(path, line_no, "label must be 0 or 1");
        out.cloud.vertices.push_back(v);
        out.labels.push_back(toks[3] == "1" ? 1 : 0);
    }
    if (out.cloud.empty()) throw std::runtime_error(path + ": empty point cloud");
    return out;
}

/// Minimal ascii PLY reader: takes x,y,z from the vertex element, skips any
/// other properties and elements.
inline PointCloud load_ply_ascii(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated " + what);
        ++line_no;
    };

    next_line("header");
    if (detail::split_ws(line) != std::vector<std::string_view>{"ply"})
        detail::parse_fail(path, line_no, "missing ply magic");

    long long vertex_count = -1;
    int xi = -1, yi = -1, zi = -1;
    int prop_index = 0;
    bool in_vertex_element = false;
    bool ascii = false;
    for (;;) {
        next_line("header");
        const auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "comment") continue;
        if (toks[0] == "format") {
            ascii = toks.size() >= 2 && toks[1] == "ascii";
            if (!ascii) detail::parse_fail(path, line_no, "only ascii PLY is supported");
        } else if (toks[0] == "element") {
            in_vertex_element = toks.size() >= 3 && toks[1] == "vertex";
            if (in_vertex_element) {
                double n = 0;
                if (!detail::parse_double(toks[2], n) || n < 1)
                    detail::parse_fail(path, line_no, "bad vertex count");
                vertex_count = static_cast<long long>(n);
                prop_index = 0;
            }
        } else if (toks[0] == "property" && in_vertex_element) {
            if (toks.size() >= 3) {
                if (toks.back() == "x") xi = prop_index;
                if (toks.back() == "y") yi = prop_index;
                if (toks.back() == "z") zi = prop_index;
            }
            ++prop_index;
        } else if (toks[0] == "end_header") {
            break;
        }
    }
    if (vertex_count < 0) throw std::runtime_error(path + ": no vertex element declared");
    if (xi < 0 || yi < 0 || zi < 0)
        throw std::runtime_error(path + ": vertex element lacks x/y/z properties");

    PointCloud cloud;
    cloud.vertices.reserve(static_cast<std::size_t>(vertex_count));
    for (long long i = 0; i < vertex_count; ++i) {
        next_line("vertex data");
        const auto toks = detail::split_ws(line);
        if (toks.empty()) {
            --i;
            continue;
        }
        if (static_cast<int>(toks.size()) < prop_index)
            detail::parse_fail(path, line_no, "expected " + std::to_string(prop_index) + " fields");
        Vec3 v;
        if (!detail::parse_double(toks[static_cast<std::size_t>(xi)], v.x()) ||
            !detail::parse_double(toks[static_cast<std::size_t>(yi)], v.y()) ||
            !detail::parse_double(toks[static_cast<std::size_t>(zi)], v.z()))
            detail::parse_fail(path, line_no, "bad vertex coordinate");
        cloud.vertices.push_back(v);
    }
    if (cloud.empty()) throw std::runtime_error(path + ": empty point cloud");
    return cloud;
}

inline PointCloud load_cloud(const std::string& path, CloudFormat format) {
    switch (format) {
        case CloudFormat::XyzAscii: return load_xyz(path);
        case CloudFormat::PlyAscii: return load_ply_ascii(path);
        case CloudFormat::LabeledXyz: return load_labeled_xyz(path).cloud;
    }
    throw std::invalid_argument("load_cloud: unknown format");
}

namespace detail {

inline void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace detail

inline void save_xyz(const PointCloud& cloud, const std::string& path) {
    std::string body;
    body.reserve(cloud.size() * 32);
    for (const auto& v : cloud.vertices) {
        detail::append_g9(body, v.x());
        body += ' ';
        detail::append_g9(body, v.y());
        body += ' ';
        detail::append_g9(body, v.z());
        body += '\n';
    }
    detail::write_file(path, body);
}

inline void save_labeled_xyz(const LabeledCloud& labeled, const std::string& path) {
    if (labeled.labels.size() != labeled.cloud.size())
        throw std::invalid_argument("save_labeled_xyz: label array length mismatch");
    std::string body;
    body.reserve(labeled.size() * 34);
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        const auto& v = labeled.cloud.vertices[i];
        detail::append_g9(body, v.x());
        body += ' ';
        detail::append_g9(body, v.y());
        body += ' ';
        detail::append_g9(body, v.z());
        body += labeled.labels[i] ? " 1\n" : " 0\n";
    }
    detail::write_file(path, body);
}

/// "x y z s" with a real-valued fourth column (saliency exports, heatmaps).
inline void save_scalar_field(const PointCloud& cloud, const std::vector<double>& values,
                              const std::string& path) {
    if (values.size() != cloud.size())
        throw std::invalid_argument("save_scalar_field: value array length mismatch");
    std::string body;
    body.reserve(cloud.size() * 40);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& v = cloud.vertices[i];
        detail::append_g9(body, v.x());
        body += ' ';
        detail::append_g9(body, v.y());
        body += ' ';
        detail::append_g9(body, v.z());
        body += ' ';
        detail::append_g9(body, values[i]);
        body += '\n';
    }
    detail::write_file(path, body);
}

}  // namespace hazmap
