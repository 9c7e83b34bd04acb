#include "zs3/report_io.hpp"

#include "zs3/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace zs3 {

namespace {

std::string pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%5.1f", 100.0 * fraction);
    return buf;
}

std::string group_cells(const GroupMetrics& g) {
    if (g.empty) return "   --    --    --";
    return pct(g.pixel_accuracy) + " " + pct(g.mean_accuracy) + " " + pct(g.mean_iou);
}

} // namespace

std::string report_to_text(const EvalReport& report, const ClassCatalog& catalog,
                           const std::string& row_label) {
    std::ostringstream out;
    out << "                |        Seen       |       Unseen      |          Overall\n";
    out << "                |   PA    MA   mIoU |   PA    MA   mIoU |   PA    MA   mIoU   hIoU\n";
    char label[32];
    std::snprintf(label, sizeof(label), "%-15s", row_label.c_str());
    out << label << " | " << group_cells(report.seen) << " | " << group_cells(report.unseen) << " | "
        << group_cells(report.overall);
    if (report.unseen.empty)
        out << "     --";
    else
        out << "  " << pct(report.h_iou);
    out << "\n\nper class:\n";
    for (std::size_t c = 0; c < report.n_classes; ++c) {
        char line[128];
        const bool excluded = report.class_iou[c] < 0.0;
        if (excluded) {
            std::snprintf(line, sizeof(line), "  %-10s %-6s    --     --\n", catalog.names[c].c_str(),
                          catalog.seen[c] ? "seen" : "unseen");
        } else {
            const double acc = report.class_accuracy[c];
            std::snprintf(line, sizeof(line), "  %-10s %-6s  %s  %s\n", catalog.names[c].c_str(),
                          catalog.seen[c] ? "seen" : "unseen", acc < 0.0 ? "   --" : pct(acc).c_str(),
                          pct(report.class_iou[c]).c_str());
        }
        out << line;
    }
    return out.str();
}

std::string report_to_json(const EvalReport& report, const ClassCatalog& catalog,
                           const std::string& config_echo_json, std::uint64_t seed) {
    using Json = nlohmann::ordered_json;
    Json doc = Json::object();
    doc["seed"] = seed;
    if (!config_echo_json.empty()) {
        try {
            doc["config"] = Json::parse(config_echo_json);
        } catch (const Json::parse_error&) {
            doc["config"] = config_echo_json;
        }
    }
    Json classes = Json::array();
    for (std::size_t c = 0; c < report.n_classes; ++c) {
        Json entry = Json::object();
        entry["name"] = catalog.names[c];
        entry["seen"] = static_cast<bool>(catalog.seen[c]);
        if (report.class_iou[c] >= 0.0) entry["iou"] = report.class_iou[c];
        if (report.class_accuracy[c] >= 0.0) entry["accuracy"] = report.class_accuracy[c];
        classes.push_back(entry);
    }
    doc["classes"] = classes;
    auto group = [](const GroupMetrics& g) {
        Json j = Json::object();
        j["empty"] = g.empty;
        j["pixel_accuracy"] = g.pixel_accuracy;
        j["mean_accuracy"] = g.mean_accuracy;
        j["mean_iou"] = g.mean_iou;
        j["gt_pixels"] = g.gt_pixels;
        return j;
    };
    doc["seen"] = group(report.seen);
    doc["unseen"] = group(report.unseen);
    doc["overall"] = group(report.overall);
    doc["h_iou"] = report.h_iou;
    Json confusion = Json::array();
    for (std::size_t i = 0; i < report.n_classes; ++i) {
        Json row = Json::array();
        for (std::size_t j = 0; j < report.n_classes; ++j) row.push_back(report.count(i, j));
        confusion.push_back(row);
    }
    doc["confusion"] = confusion;
    return doc.dump(2) + "\n";
}

void emit_report(const EvalReport& report, const ClassCatalog& catalog, const std::string& path,
                 ReportFormat format, const std::string& row_label, const std::string& config_echo_json,
                 std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report file '" + path + "'");
    const std::string body = format == ReportFormat::text
                                 ? report_to_text(report, catalog, row_label)
                                 : report_to_json(report, catalog, config_echo_json, seed);
    out << body;
    if (!out) throw IoError("write failure on '" + path + "'");
}

} // namespace zs3
