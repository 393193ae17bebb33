#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace hazmap {

struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t actual_positive() const { return tp + fn; }  // |P|
    std::int64_t actual_negative() const { return tn + fp; }  // |R|
    std::int64_t total() const { return tp + fp + tn + fn; }
};

/// Per-vertex binary comparison; 'true'/1 marks a pothole vertex.
inline ConfusionMatrix confusion(const std::vector<int>& predicted,
                                 const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("confusion: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i]) {
            ++(predicted[i] ? cm.tp : cm.fn);
        } else {
            ++(predicted[i] ? cm.fp : cm.tn);
        }
    }
    return cm;
}

/// Point-level percentages and ratios.  Quantities with a zero denominator
/// carry defined == false and must not be read as numbers.
struct EvalReport {
    struct Value {
        double value = 0.0;
        bool defined = false;
    };
    Value rp;         // 100*tp/|P|, correctly annotated pothole vertices
    Value rr;         // 100*tn/|R|, correctly annotated road vertices
    Value np_;        // 100 - rr
    Value nr;         // 100 - rp
    Value precision;  // tp/(tp+fp)
    Value recall;     // tp/(tp+fn)
    Value accuracy;   // (tp+tn)/total
    Value f_score;    // harmonic mean of precision and recall
};

inline double f_score(double precision, double recall) {
    return 2.0 * precision * recall / (precision + recall);
}

inline EvalReport report(const ConfusionMatrix& cm) {
    EvalReport r;
    const auto set = [](EvalReport::Value& v, double num, double den) {
        if (den > 0) {
            v.value = num / den;
            v.defined = true;
        }
    };
    const auto p = static_cast<double>(cm.actual_positive());
    const auto n = static_cast<double>(cm.actual_negative());
    set(r.rp, 100.0 * static_cast<double>(cm.tp), p);
    set(r.rr, 100.0 * static_cast<double>(cm.tn), n);
    if (r.rp.defined) r.nr = {100.0 - r.rp.value, true};
    if (r.rr.defined) r.np_ = {100.0 - r.rr.value, true};
    set(r.precision, static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fp));
    set(r.recall, static_cast<double>(cm.tp), p);
    set(r.accuracy, static_cast<double>(cm.tp + cm.tn), static_cast<double>(cm.total()));
    if (r.precision.defined && r.recall.defined && r.precision.value + r.recall.value > 0)
        r.f_score = {f_score(r.precision.value, r.recall.value), true};
    return r;
}

/// Obstacle-level tallies: (correct, incorrect, misdetection).
struct DetectionCounts {
    std::int64_t correct = 0;
    std::int64_t incorrect = 0;
    std::int64_t misdetection = 0;
};

/// Greedy one-to-one matching by overlap fraction |pred ∩ truth| / |truth|,
/// largest overlap first (ties: lower truth index, then lower predicted
/// index).  Matches with overlap >= tau count as correct; leftover predictions
/// are incorrect, leftover truths misdetections.  Vertex sets must be sorted.
inline DetectionCounts detection_counts(
    const std::vector<std::vector<uint32_t>>& predicted,
    const std::vector<std::vector<uint32_t>>& truth, double overlap_tau = 0.5) {
    if (overlap_tau <= 0 || overlap_tau > 1)
        throw std::invalid_argument("detection_counts: overlap_tau must be in (0,1]");

    struct Pair {
        double overlap;
        std::size_t t, p;
    };
    std::vector<Pair> pairs;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        if (truth[t].empty()) throw std::invalid_argument("detection_counts: empty truth set");
        for (std::size_t p = 0; p < predicted.size(); ++p) {
            std::vector<uint32_t> common;
            std::set_intersection(predicted[p].begin(), predicted[p].end(), truth[t].begin(),
                                  truth[t].end(), std::back_inserter(common));
            const double overlap =
                static_cast<double>(common.size()) / static_cast<double>(truth[t].size());
            if (overlap >= overlap_tau) pairs.push_back({overlap, t, p});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        if (a.t != b.t) return a.t < b.t;
        return a.p < b.p;
    });

    std::vector<char> t_used(truth.size(), 0), p_used(predicted.size(), 0);
    DetectionCounts out;
    for (const auto& pr : pairs) {
        if (t_used[pr.t] || p_used[pr.p]) continue;
        t_used[pr.t] = 1;
        p_used[pr.p] = 1;
        ++out.correct;
    }
    for (char u : p_used)
        if (!u) ++out.incorrect;
    for (char u : t_used)
        if (!u) ++out.misdetection;
    return out;
}

// --- table formatting -----------------------------------------------------

namespace detail {

inline std::string fmt2(const EvalReport::Value& v) {
    if (!v.defined) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v.value);
    return buf;
}

inline EvalReport::Value pick(const EvalReport& r, int metric) {
    switch (metric) {
        case 0: return r.rp;
        case 1: return r.nr;
        case 2: return r.np_;
        default: return r.rr;
    }
}

}  // namespace detail

struct TableReport {
    std::string text;
    std::string csv;
};

/// RP/NR/NP/RR grid: one row per (model, metric), one column per density, plus
/// Average rows holding the arithmetic mean over models of each defined cell.
inline TableReport table_report(const std::vector<std::string>& model_names,
                                const std::vector<std::vector<EvalReport>>& reports,
                                const std::vector<std::string>& density_labels) {
    if (model_names.empty() || model_names.size() != reports.size())
        throw std::invalid_argument("table_report: need one report row per model");
    for (const auto& row : reports)
        if (row.size() != density_labels.size())
            throw std::invalid_argument("table_report: report row/density count mismatch");

    static const char* metric_names[4] = {"RP", "NR", "NP", "RR"};

    std::vector<EvalReport> average(density_labels.size());
    for (std::size_t d = 0; d < density_labels.size(); ++d) {
        for (int metric = 0; metric < 4; ++metric) {
            double sum = 0;
            std::size_t count = 0;
            for (const auto& row : reports) {
                const auto v = detail::pick(row[d], metric);
                if (v.defined) {
                    sum += v.value;
                    ++count;
                }
            }
            EvalReport::Value out;
            if (count == model_names.size()) out = {sum / static_cast<double>(count), true};
            auto& slot = average[d];
            switch (metric) {
                case 0: slot.rp = out; break;
                case 1: slot.nr = out; break;
                case 2: slot.np_ = out; break;
                default: slot.rr = out; break;
            }
        }
    }

    auto all_names = model_names;
    all_names.push_back("Average");
    auto all_reports = reports;
    all_reports.push_back(average);

    std::size_t name_w = 5;
    for (const auto& n : all_names) name_w = std::max(name_w, n.size());

    TableReport out;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-*s %-6s", static_cast<int>(name_w), "Model", "Metric");
    out.text += buf;
    out.csv += "model,metric";
    for (const auto& d : density_labels) {
        std::snprintf(buf, sizeof(buf), " %10s", d.c_str());
        out.text += buf;
        out.csv += ',';
        out.csv += d;
    }
    out.text += '\n';
    out.csv += '\n';

    for (std::size_t m = 0; m < all_names.size(); ++m) {
        for (int metric = 0; metric < 4; ++metric) {
            std::snprintf(buf, sizeof(buf), "%-*s %-6s", static_cast<int>(name_w),
                          all_names[m].c_str(), metric_names[metric]);
            out.text += buf;
            out.csv += all_names[m];
            out.csv += ',';
            out.csv += metric_names[metric];
            for (std::size_t d = 0; d < density_labels.size(); ++d) {
                const std::string cell = detail::fmt2(detail::pick(all_reports[m][d], metric));
                std::snprintf(buf, sizeof(buf), " %10s", cell.c_str());
                out.text += buf;
                out.csv += ',';
                out.csv += cell;
            }
            out.text += '\n';
            out.csv += '\n';
        }
    }
    return out;
}

}  // namespace hazmap
