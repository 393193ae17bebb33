// hazmap command-line front end.
//
// One binary, six subcommands: detect, synth, eval, render, serve, replay.
// Machine-readable results go to files, human summaries to stdout.  Exit
// codes: 0 success, 1 pipeline failure, 2 usage or input error.
//
// Settings come from a flat key=value config file (--config) overridden by
// flags; every consumed key is validated and unknown keys are rejected.
// Environment variables are deliberately not consulted.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hazmap/hazmap.hpp"

namespace {

using hazmap::Vec2;
using hazmap::Vec3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_readable(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
}

// --- config assembly -----------------------------------------------------

struct ConfigInputs {
    std::string file;
    std::vector<std::pair<std::string, std::string>> overrides;  // flags win
};

hazmap::KeyValues merged(const ConfigInputs& in) {
    hazmap::KeyValues kv;
    try {
        if (!in.file.empty()) kv = hazmap::KeyValues::load(in.file);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    for (const auto& [key, value] : in.overrides) kv.set(key, value);
    return kv;
}

void flag_override(const CLI::App* cmd, const std::string& flag, const std::string& key,
                   const std::string& value, ConfigInputs& cfg) {
    if (cmd->count(flag) > 0) cfg.overrides.emplace_back(key, value);
}

void camera_overrides(const std::vector<std::string>& items, ConfigInputs& cfg) {
    for (const std::string& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("--camera expects key=value entries, got '" + item + "'");
        cfg.overrides.emplace_back("camera." + item.substr(0, eq), item.substr(eq + 1));
    }
}

// Reads a parameter block; any malformed value surfaces as a usage error.
template <typename Fn>
auto checked(Fn&& fn) {
    try {
        return fn();
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

// --- parameter blocks ----------------------------------------------------

hazmap::SaliencyConfig saliency_from(const hazmap::KeyValues& kv) {
    hazmap::SaliencyConfig s;
    s.k = static_cast<int>(kv.get_int("saliency.k", s.k));
    s.w1 = kv.get_double("saliency.w1", s.w1);
    s.w2 = kv.get_double("saliency.w2", s.w2);
    if (s.k < 1) throw UsageError("saliency.k must be >= 1");
    if (s.w1 < 0.0 || s.w2 < 0.0 || s.w1 + s.w2 <= 0.0)
        throw UsageError("saliency.w1/w2 must be nonnegative with a positive sum");
    s.rpca.lambda = kv.get_double("rpca.lambda", s.rpca.lambda);
    s.rpca.epsilon = kv.get_double("rpca.epsilon", s.rpca.epsilon);
    s.rpca.initial_rank = kv.get_int("rpca.initial_rank", s.rpca.initial_rank);
    s.rpca.max_rank = kv.get_int("rpca.max_rank", s.rpca.max_rank);
    s.rpca.tol = kv.get_double("rpca.tol", s.rpca.tol);
    s.rpca.max_iter = static_cast<int>(kv.get_int("rpca.max_iter", s.rpca.max_iter));
    if (s.rpca.epsilon <= 0.0 || s.rpca.tol <= 0.0 || s.rpca.max_iter < 1 ||
        s.rpca.initial_rank < 1 || s.rpca.max_rank < 0)
        throw UsageError("rpca.* values out of range");
    return s;
}

hazmap::DetectionParams detection_from(const hazmap::KeyValues& kv) {
    hazmap::DetectionParams p;
    p.saliency = saliency_from(kv);
    p.thresholds.t_s = kv.get_double("seg.t_s", p.thresholds.t_s);
    p.thresholds.h_neg = kv.get_double("seg.h_neg", p.thresholds.h_neg);
    p.thresholds.h_pos = kv.get_double("seg.h_pos", p.thresholds.h_pos);
    p.thresholds.h_flat = kv.get_double("seg.h_flat", p.thresholds.h_flat);
    p.corridor_length = kv.get_double("corridor.length", p.corridor_length);
    p.corridor_width = kv.get_double("corridor.width", p.corridor_width);
    p.inlier_tol = kv.get_double("seg.inlier_tol", p.inlier_tol);
    p.ransac_seed = static_cast<uint64_t>(kv.get_int("seg.ransac_seed",
                                                     static_cast<std::int64_t>(p.ransac_seed)));
    p.ransac_iterations =
        static_cast<int>(kv.get_int("seg.ransac_iterations", p.ransac_iterations));
    p.cluster_radius = kv.get_double("seg.cluster_radius", p.cluster_radius);
    const std::int64_t mp =
        kv.get_int("seg.min_points", static_cast<std::int64_t>(p.min_points));
    p.claim_margin = kv.get_double("seg.claim_margin", p.claim_margin);
    if (p.thresholds.t_s < 0.0 || p.thresholds.t_s > 1.0 || p.thresholds.h_neg <= 0.0 ||
        p.thresholds.h_pos <= 0.0 || p.thresholds.h_flat < 0.0)
        throw UsageError("seg.t_s/h_neg/h_pos/h_flat out of range");
    if (p.corridor_length <= 0.0 || p.corridor_width <= 0.0)
        throw UsageError("corridor.length and corridor.width must be positive");
    if (p.inlier_tol <= 0.0 || p.ransac_iterations < 1 || p.cluster_radius <= 0.0 || mp < 1)
        throw UsageError("seg.* values out of range");
    p.min_points = static_cast<std::size_t>(mp);
    return p;
}

hazmap::VehicleState vehicle_from(const hazmap::KeyValues& kv) {
    hazmap::VehicleState v;
    v.position = Vec3(kv.get_double("vehicle.x", 0.0), kv.get_double("vehicle.y", 0.0),
                      kv.get_double("vehicle.z", 0.0));
    const Vec2 heading(kv.get_double("vehicle.heading_x", 1.0),
                       kv.get_double("vehicle.heading_y", 0.0));
    if (heading.norm() == 0.0) throw UsageError("vehicle heading must be nonzero");
    v.heading = heading.normalized();
    v.steering_angle = kv.get_double("vehicle.steering", 0.0);
    return v;
}

hazmap::CameraModel camera_from(const hazmap::KeyValues& kv) {
    hazmap::CameraModel c;
    c.fx = kv.get_double("camera.fx", c.fx);
    c.fy = kv.get_double("camera.fy", c.fy);
    c.x0 = kv.get_double("camera.x0", c.x0);
    c.y0 = kv.get_double("camera.y0", c.y0);
    c.width = static_cast<int>(kv.get_int("camera.width", c.width));
    c.height = static_cast<int>(kv.get_int("camera.height", c.height));
    c.lidar_to_camera = Vec3(kv.get_double("camera.tx", c.lidar_to_camera.x()),
                             kv.get_double("camera.ty", c.lidar_to_camera.y()),
                             kv.get_double("camera.tz", c.lidar_to_camera.z()));
    c.validate();
    return c;
}

uint64_t seed_from(const hazmap::KeyValues& kv, std::int64_t fallback) {
    const std::int64_t s = kv.get_int("seed", fallback);
    if (s < 0) throw UsageError("seed must be nonnegative");
    return static_cast<uint64_t>(s);
}

// --- input sniffing ------------------------------------------------------

hazmap::CloudFormat sniff_format(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ply") == 0)
        return hazmap::CloudFormat::PlyAscii;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        int fields = 0;
        while (ls >> tok) ++fields;
        if (fields == 0) continue;
        return fields == 4 ? hazmap::CloudFormat::LabeledXyz : hazmap::CloudFormat::XyzAscii;
    }
    throw UsageError(path + ": empty point cloud");
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed << v;
    return os.str();
}

std::string fmt(const hazmap::EvalReport::Value& v) { return v.defined ? fmt(v.value) : "n/a"; }

// --- detect ----------------------------------------------------------------

struct DetectArgs {
    ConfigInputs cfg;
    std::string input, output, saliency_out, labels_out;
};

int run_detect(const DetectArgs& a) {
    hazmap::KeyValues kv = merged(a.cfg);
    hazmap::DetectionParams params;
    hazmap::VehicleState state;
    double ratio = 1.0;
    uint64_t seed = 0;
    hazmap::PointCloud cloud;
    checked([&] {
        params = detection_from(kv);
        state = vehicle_from(kv);
        ratio = kv.get_double("ratio", 1.0);
        seed = seed_from(kv, 0);
        if (ratio <= 0.0 || ratio > 1.0) throw UsageError("ratio must lie in (0, 1]");
        kv.reject_unknown();
        require_readable(a.input);
        cloud = hazmap::load_cloud(a.input, sniff_format(a.input));
    });

    const std::size_t loaded = cloud.size();
    if (ratio < 1.0) cloud = hazmap::downsample(cloud, ratio, seed);

    const hazmap::DetectionResult res = hazmap::run_detection(cloud, state, params);

    hazmap::save_segmented(res.segmented, a.output + ".seg.txt");
    hazmap::save_obstacle_manifest(res.obstacles, a.output + ".obstacles.txt");
    if (!a.saliency_out.empty())
        hazmap::save_scalar_field(res.segmented.cloud, res.saliency.fused, a.saliency_out);
    if (!a.labels_out.empty()) {
        hazmap::LabeledCloud predicted;
        predicted.cloud = res.segmented.cloud;
        predicted.labels = hazmap::negative_obstacle_labels(cloud.size(), res.obstacles);
        hazmap::save_labeled_xyz(predicted, a.labels_out);
    }

    std::size_t per_class[5] = {0, 0, 0, 0, 0};
    for (const hazmap::RegionClass c : res.segmented.classes) ++per_class[static_cast<int>(c)];
    std::size_t negatives = 0;
    for (const auto& ob : res.obstacles)
        if (ob.kind == hazmap::ObstacleKind::Negative) ++negatives;

    std::cout << "points " << cloud.size();
    if (ratio < 1.0) std::cout << " (sampled from " << loaded << " at ratio " << ratio << ")";
    std::cout << "\nplane normal " << fmt(res.segmented.plane.normal.x()) << ' '
              << fmt(res.segmented.plane.normal.y()) << ' '
              << fmt(res.segmented.plane.normal.z()) << "  offset "
              << fmt(res.segmented.plane.offset) << "\nclasses";
    for (int c = 0; c < 5; ++c)
        std::cout << ' ' << hazmap::region_class_name(static_cast<hazmap::RegionClass>(c)) << '='
                  << per_class[c];
    std::cout << "\nobstacles " << res.obstacles.size() << " (negative " << negatives
              << ", positive " << res.obstacles.size() - negatives << ")\nwrote " << a.output
              << ".seg.txt " << a.output << ".obstacles.txt";
    if (!a.saliency_out.empty()) std::cout << ' ' << a.saliency_out;
    std::cout << '\n';
    return 0;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
    ConfigInputs cfg;
    std::string output;
};

int run_synth(const SynthArgs& a) {
    hazmap::KeyValues kv = merged(a.cfg);
    hazmap::SceneParams sp;
    uint64_t seed = 1;
    checked([&] {
        sp.patch.length = kv.get_double("synth.length", sp.patch.length);
        sp.patch.width = kv.get_double("synth.width", sp.patch.width);
        sp.patch.spacing = kv.get_double("synth.spacing", sp.patch.spacing);
        sp.patch.noise_sigma = kv.get_double("synth.noise_sigma", sp.patch.noise_sigma);
        sp.n_potholes = static_cast<std::size_t>(
            kv.get_int("synth.potholes", static_cast<std::int64_t>(sp.n_potholes)));
        sp.depth_min = kv.get_double("synth.depth_min", sp.depth_min);
        sp.depth_max = kv.get_double("synth.depth_max", sp.depth_max);
        sp.axis_min = kv.get_double("synth.axis_min", sp.axis_min);
        sp.axis_max = kv.get_double("synth.axis_max", sp.axis_max);
        sp.power_min = kv.get_double("synth.power_min", sp.power_min);
        sp.power_max = kv.get_double("synth.power_max", sp.power_max);
        sp.separation = kv.get_double("synth.separation", sp.separation);
        sp.max_attempts = static_cast<int>(kv.get_int("synth.max_attempts", sp.max_attempts));
        seed = seed_from(kv, 1);
        if (sp.patch.length <= 0.0 || sp.patch.width <= 0.0 || sp.patch.spacing <= 0.0)
            throw UsageError("synth.length/width/spacing must be positive");
        if (sp.patch.noise_sigma < 0.0) throw UsageError("synth.noise_sigma must be >= 0");
        if (sp.depth_min <= 0.0 || sp.depth_max < sp.depth_min)
            throw UsageError("synth.depth_min/max out of range");
        if (sp.axis_min <= 0.0 || sp.axis_max < sp.axis_min)
            throw UsageError("synth.axis_min/max out of range");
        if (sp.power_min <= 0.0 || sp.power_max < sp.power_min)
            throw UsageError("synth.power_min/max out of range");
        if (sp.separation < 0.0 || sp.max_attempts < 1)
            throw UsageError("synth.separation/max_attempts out of range");
        kv.reject_unknown();
    });

    const hazmap::Scene scene = hazmap::generate_scene(sp, seed);
    hazmap::save_labeled_xyz(scene.labeled, a.output + ".xyz");
    hazmap::save_scene_manifest(scene, a.output + ".truth.txt");

    std::size_t pothole_vertices = 0;
    for (int lab : scene.labeled.labels) pothole_vertices += lab != 0 ? 1 : 0;
    std::cout << "points " << scene.labeled.cloud.size() << ", potholes " << scene.truth.size()
              << ", pothole vertices " << pothole_vertices << "\nwrote " << a.output << ".xyz "
              << a.output << ".truth.txt\n";
    return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string input, truth;
};

int run_eval(const EvalArgs& a) {
    hazmap::LabeledCloud predicted, truth;
    checked([&] {
        require_readable(a.input);
        require_readable(a.truth);
        predicted = hazmap::load_labeled_xyz(a.input);
        truth = hazmap::load_labeled_xyz(a.truth);
        if (predicted.labels.size() != truth.labels.size())
            throw UsageError("predicted and truth vertex counts differ (" +
                             std::to_string(predicted.labels.size()) + " vs " +
                             std::to_string(truth.labels.size()) + ")");
    });

    const hazmap::ConfusionMatrix cm = hazmap::confusion(predicted.labels, truth.labels);
    const hazmap::EvalReport r = hazmap::report(cm);
    std::cout << "vertices " << predicted.labels.size() << "  tp " << cm.tp << "  fp " << cm.fp
              << "  fn " << cm.fn << "  tn " << cm.tn << '\n'
              << "RP " << fmt(r.rp) << "  NR " << fmt(r.nr) << "  NP " << fmt(r.np_) << "  RR "
              << fmt(r.rr) << '\n'
              << "precision " << fmt(r.precision) << "  recall " << fmt(r.recall) << "  F "
              << fmt(r.f_score) << "  accuracy " << fmt(r.accuracy) << '\n';
    return 0;
}

// --- render ----------------------------------------------------------------

struct RenderArgs {
    ConfigInputs cfg;
    std::string input, output;
};

int run_render(const RenderArgs& a) {
    hazmap::KeyValues kv = merged(a.cfg);
    hazmap::CameraModel camera;
    hazmap::Palette palette = hazmap::default_palette();
    hazmap::SegmentedCloud seg;
    hazmap::PixmapMode mode = hazmap::PixmapMode::Ascii;
    std::string fill = "0";
    int fill_iterations = 0;
    int connectivity = 4;
    checked([&] {
        camera = camera_from(kv);
        fill = kv.get_string("render.fill", fill);
        if (fill != "full") {
            fill_iterations = static_cast<int>(kv.get_int("render.fill", 0));
            if (fill_iterations < 0) throw UsageError("render.fill must be >= 0 or 'full'");
        }
        connectivity = static_cast<int>(kv.get_int("render.connectivity", connectivity));
        if (connectivity != 4 && connectivity != 8)
            throw UsageError("render.connectivity must be 4 or 8");
        const std::string format = kv.get_string("render.format", "p3");
        if (format == "p3")
            mode = hazmap::PixmapMode::Ascii;
        else if (format == "p6")
            mode = hazmap::PixmapMode::Binary;
        else
            throw UsageError("render.format must be p3 or p6");
        if (const auto bg = kv.get("render.background"))
            palette.background = hazmap::parse_rgb(*bg);
        for (const auto& [key, value] : kv.take_prefixed("class.")) {
            const std::string id_text = key.substr(6);
            std::size_t used = 0;
            int id = -1;
            try {
                id = std::stoi(id_text, &used);
            } catch (...) {
            }
            if (used != id_text.size() || id < 0)
                throw UsageError("bad palette key '" + key + "'");
            palette.classes[id] = hazmap::parse_rgb(value);
        }
        kv.reject_unknown();
        require_readable(a.input);
        seg = hazmap::load_segmented(a.input);
    });

    std::vector<int> ids(seg.size());
    for (std::size_t i = 0; i < seg.size(); ++i) ids[i] = static_cast<int>(seg.classes[i]);
    hazmap::ClassImage image = hazmap::render_classes(seg.cloud, ids, camera);

    const auto empties = [&image] {
        return static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height) -
               image.painted();
    };
    if (fill == "full") {
        std::size_t before = empties();
        while (before > 0) {
            image = hazmap::fill_gaps(image, 1, connectivity);
            const std::size_t after = empties();
            if (after == before) break;  // nothing painted at all, no seed to grow
            before = after;
        }
    } else if (fill_iterations > 0) {
        image = hazmap::fill_gaps(image, fill_iterations, connectivity);
    }

    hazmap::write_image(image, palette, a.output, mode);
    std::cout << "rendered " << image.width << 'x' << image.height << ", painted "
              << image.painted() << ", empty " << empties() << "\nwrote " << a.output << '\n';
    return 0;
}

// --- serve -----------------------------------------------------------------

std::atomic<int> g_stop{0};

extern "C" void handle_stop_signal(int) { g_stop.store(1); }

struct ServeArgs {
    ConfigInputs cfg;
    std::string log;
};

int run_serve(const ServeArgs& a) {
    hazmap::KeyValues kv = merged(a.cfg);
    hazmap::registry::Endpoint endpoint;
    hazmap::registry::RegistryConfig rc;
    checked([&] {
        endpoint =
            hazmap::registry::parse_endpoint(kv.get_string("registry.endpoint", "127.0.0.1:0"));
        rc.match_radius = kv.get_double("registry.match_radius", rc.match_radius);
        rc.alert_radius = kv.get_double("registry.alert_radius", rc.alert_radius);
        if (rc.match_radius <= 0.0 || rc.alert_radius <= 0.0)
            throw UsageError("registry radii must be positive");
        kv.reject_unknown();
    });

    hazmap::registry::RegistryServer server(endpoint, rc, a.log);
    std::cout << "listening on " << endpoint.host << ':' << server.port() << std::endl;

    std::signal(SIGINT, handle_stop_signal);
    std::signal(SIGTERM, handle_stop_signal);
    while (g_stop.load() == 0) std::this_thread::sleep_for(std::chrono::milliseconds(50));

    server.stop();
    std::cout << "stopped with " << server.record_count() << " records, "
              << server.event_log().size() << " events\n";
    return 0;
}

// --- replay ----------------------------------------------------------------

struct ReplayArgs {
    ConfigInputs cfg;
    std::string input, agent = "ego";
};

int run_replay(const ReplayArgs& a) {
    hazmap::KeyValues kv = merged(a.cfg);
    hazmap::registry::ReplayConfig rc;
    hazmap::registry::Endpoint endpoint;
    std::vector<hazmap::registry::ReplayFrame> frames;
    checked([&] {
        rc.detect = detection_from(kv);
        rc.query_radius = kv.get_double("replay.query_radius", rc.query_radius);
        rc.match_radius = kv.get_double("replay.match_radius", rc.match_radius);
        rc.alert_poll_ms = static_cast<int>(kv.get_int("replay.alert_poll_ms", rc.alert_poll_ms));
        if (rc.query_radius <= 0.0 || rc.match_radius <= 0.0 || rc.alert_poll_ms < 0)
            throw UsageError("replay.* values out of range");
        const std::string ep = kv.get_string("registry.endpoint", "");
        if (ep.empty())
            throw UsageError("an endpoint is required (--endpoint or registry.endpoint)");
        endpoint = hazmap::registry::parse_endpoint(ep);
        kv.reject_unknown();
        require_readable(a.input);
        frames = hazmap::registry::load_replay_frames(a.input);
    });

    hazmap::registry::RegistryClient client(endpoint);
    const hazmap::registry::ReplayReport rep =
        hazmap::registry::agent_replay(frames, client, rc, a.agent);

    std::map<std::string, int> actions;
    for (const auto& [frame, ack] : rep.acks) ++actions[ack.action];
    std::cout << "agent " << a.agent << ": frames " << rep.frames_processed << ", reports "
              << rep.reports_sent << "\nacks:";
    if (actions.empty()) std::cout << " none";
    for (const auto& [action, n] : actions) std::cout << ' ' << action << '=' << n;
    std::cout << "\nalerts received " << rep.alerts.size() << "\nearly warnings "
              << rep.early_warnings.size() << '\n';
    for (const auto& w : rep.early_warnings)
        std::cout << "  record " << w.record_id << " known at frame " << w.seen_frame
                  << ", own detection at frame " << w.detect_frame << '\n';

    if (rep.aborted) {
        std::cerr << "error: replay aborted: " << rep.abort_reason << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"point cloud road hazard toolkit"};
    app.require_subcommand(1);

    DetectArgs detect;
    std::string detect_seed, detect_k, detect_w1, detect_w2, detect_ratio;
    CLI::App* cmd_detect =
        app.add_subcommand("detect", "segment a cloud and extract obstacles");
    cmd_detect->add_option("--config", detect.cfg.file, "key=value config file");
    cmd_detect->add_option("--input", detect.input, "point cloud (xyz, labeled xyz, or ascii ply)")
        ->required();
    cmd_detect->add_option("--output", detect.output,
                           "output prefix for .seg.txt and .obstacles.txt")
        ->required();
    cmd_detect->add_option("--seed", detect_seed, "sampling seed, key 'seed'");
    cmd_detect->add_option("--k", detect_k, "saliency neighborhood size, key 'saliency.k'");
    cmd_detect->add_option("--w1", detect_w1, "geometric weight, key 'saliency.w1'");
    cmd_detect->add_option("--w2", detect_w2, "spectral weight, key 'saliency.w2'");
    cmd_detect->add_option("--ratio", detect_ratio, "keep this fraction of points, key 'ratio'");
    cmd_detect->add_option("--saliency-out", detect.saliency_out,
                           "also export per-vertex fused saliency");
    cmd_detect->add_option("--labels-out", detect.labels_out,
                           "also export binary pothole labels for eval");

    SynthArgs synth;
    std::string synth_seed;
    CLI::App* cmd_synth = app.add_subcommand("synth", "generate a seeded pothole scene");
    cmd_synth->add_option("--config", synth.cfg.file, "key=value config file");
    cmd_synth->add_option("--output", synth.output, "output prefix for .xyz and .truth.txt")
        ->required();
    cmd_synth->add_option("--seed", synth_seed, "scene seed, key 'seed'");

    EvalArgs eval;
    CLI::App* cmd_eval = app.add_subcommand("eval", "score predicted labels against truth");
    cmd_eval->add_option("--input", eval.input, "predicted labeled xyz")->required();
    cmd_eval->add_option("--truth", eval.truth, "ground truth labeled xyz")->required();

    RenderArgs render;
    std::vector<std::string> render_camera;
    CLI::App* cmd_render = app.add_subcommand("render", "project a segmented cloud to a pixmap");
    cmd_render->add_option("--config", render.cfg.file, "key=value config file");
    cmd_render->add_option("--input", render.input, "segmented cloud (x y z class)")->required();
    cmd_render->add_option("--output", render.output, "pixmap path")->required();
    cmd_render->add_option("--camera", render_camera,
                           "camera overrides, e.g. fx=500,width=640 (keys 'camera.*')")
        ->delimiter(',');

    ServeArgs serve;
    std::string serve_endpoint;
    CLI::App* cmd_serve = app.add_subcommand("serve", "run the obstacle registry service");
    cmd_serve->add_option("--config", serve.cfg.file, "key=value config file");
    cmd_serve->add_option("--endpoint", serve_endpoint,
                          "host:port to bind, port 0 picks one (key 'registry.endpoint')");
    cmd_serve->add_option("--log", serve.log, "append event log to this file");

    ReplayArgs replay;
    std::string replay_endpoint;
    CLI::App* cmd_replay =
        app.add_subcommand("replay", "drive an agent's frames against a registry");
    cmd_replay->add_option("--config", replay.cfg.file, "key=value config file");
    cmd_replay->add_option("--input", replay.input, "frame manifest: cloud-path pose per line")
        ->required();
    cmd_replay->add_option("--endpoint", replay_endpoint,
                           "registry host:port (key 'registry.endpoint')");
    cmd_replay->add_option("--agent", replay.agent, "agent id attached to reports");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cmd_detect) {
            flag_override(cmd_detect, "--seed", "seed", detect_seed, detect.cfg);
            flag_override(cmd_detect, "--k", "saliency.k", detect_k, detect.cfg);
            flag_override(cmd_detect, "--w1", "saliency.w1", detect_w1, detect.cfg);
            flag_override(cmd_detect, "--w2", "saliency.w2", detect_w2, detect.cfg);
            flag_override(cmd_detect, "--ratio", "ratio", detect_ratio, detect.cfg);
            return run_detect(detect);
        }
        if (*cmd_synth) {
            flag_override(cmd_synth, "--seed", "seed", synth_seed, synth.cfg);
            return run_synth(synth);
        }
        if (*cmd_eval) return run_eval(eval);
        if (*cmd_render) {
            camera_overrides(render_camera, render.cfg);
            return run_render(render);
        }
        if (*cmd_serve) {
            flag_override(cmd_serve, "--endpoint", "registry.endpoint", serve_endpoint,
                          serve.cfg);
            return run_serve(serve);
        }
        if (*cmd_replay) {
            flag_override(cmd_replay, "--endpoint", "registry.endpoint", replay_endpoint,
                          replay.cfg);
            return run_replay(replay);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
