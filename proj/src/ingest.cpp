#include "bovi/ingest.hpp"

#include "bovi/csv.hpp"
#include "bovi/errors.hpp"
#include "bovi/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace bovi {

std::string to_string(Period p) { return p == Period::AM ? "AM" : "PM"; }

Period period_from_string(const std::string& s) {
    if (s == "AM" || s == "am") return Period::AM;
    if (s == "PM" || s == "pm") return Period::PM;
    throw MalformedManifest("period must be AM or PM, got '" + s + "'");
}

const Session& Manifest::session_for(const std::string& video_id) const {
    for (std::size_t i = 0; i < video_ids.size(); ++i)
        if (video_ids[i] == video_id) return sessions[i];
    throw UnknownVideoReference("video '" + video_id + "' not in manifest");
}

DepthFrame load_frame_pair(const std::filesystem::path& png_path,
                           const std::filesystem::path& csv_path) {
    DepthFrame frame;
    frame.color = png::read_rgb8(png_path);
    frame.depth = csv::read_numeric_grid(csv_path);

    if (frame.color.rows() != frame.depth.rows() || frame.color.cols() != frame.depth.cols())
        throw DimensionMismatch(png_path.string() + " is " + std::to_string(frame.color.cols()) +
                                "x" + std::to_string(frame.color.rows()) + " but " +
                                csv_path.string() + " is " + std::to_string(frame.depth.cols()) +
                                "x" + std::to_string(frame.depth.rows()));
    if ((frame.depth < 0.0).any())
        throw NegativeDepth(csv_path.string() + ": negative depth value");
    if (!frame.depth.isFinite().all())
        throw MalformedCsv(csv_path.string() + ": non-finite depth value");
    return frame;
}

DepthFrame crop_frame(const DepthFrame& frame, const PixelRect& rect) {
    if (rect.w <= 0 || rect.h <= 0 || rect.x < 0 || rect.y < 0 ||
        rect.x + rect.w > frame.cols() || rect.y + rect.h > frame.rows())
        throw OutOfBounds("crop rectangle outside frame bounds");

    DepthFrame out;
    out.frame_index = frame.frame_index;
    out.video_id = frame.video_id;
    out.depth = frame.depth.block(rect.y, rect.x, rect.h, rect.w);
    out.color.r = frame.color.r.block(rect.y, rect.x, rect.h, rect.w);
    out.color.g = frame.color.g.block(rect.y, rect.x, rect.h, rect.w);
    out.color.b = frame.color.b.block(rect.y, rect.x, rect.h, rect.w);
    return out;
}

std::uint8_t pixel_hue(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    const int chroma = mx - mn;
    if (chroma == 0) return 0;

    double sector;
    if (mx == r)
        sector = std::fmod((static_cast<double>(g) - b) / chroma + 6.0, 6.0);
    else if (mx == g)
        sector = (static_cast<double>(b) - r) / chroma + 2.0;
    else
        sector = (static_cast<double>(r) - g) / chroma + 4.0;

    // half-degree scale: 360 degrees -> [0,179]
    auto hue = static_cast<int>(std::lround(sector * 30.0)) % 180;
    return static_cast<std::uint8_t>(hue);
}

HueGrid rgb_to_hue(const ColorImage& color) {
    HueGrid hue(color.rows(), color.cols());
    for (Eigen::Index y = 0; y < color.rows(); ++y)
        for (Eigen::Index x = 0; x < color.cols(); ++x)
            hue(y, x) = pixel_hue(color.r(y, x), color.g(y, x), color.b(y, x));
    return hue;
}

std::vector<int> subsample_frames(int frame_count, int skip, int stride) {
    std::vector<int> indices;
    if (stride < 1 || skip < 0 || frame_count < 0) throw OutOfBounds("invalid subsample rule");
    for (int i = skip; i < frame_count; i += stride) indices.push_back(i);
    return indices;
}

std::vector<std::pair<int, Period>> load_exclusions(const std::filesystem::path& path) {
    std::vector<std::pair<int, Period>> out;
    for (const auto& row : csv::read_rows(path)) {
        if (row.size() != 2) throw MalformedManifest(path.string() + ": expected day,period rows");
        if (row[0] == "day") continue; // optional header
        out.emplace_back(static_cast<int>(csv::parse_long(row[0], "exclusions")),
                         period_from_string(row[1]));
    }
    return out;
}

Manifest load_manifest(const std::filesystem::path& path,
                       const std::vector<std::pair<int, Period>>& exclusions) {
    auto rows = csv::read_rows(path);
    if (rows.empty()) throw MalformedManifest(path.string() + ": empty manifest");

    const std::vector<std::string> header = {"video_id", "cow_id", "day", "period",
                                             "body_weight_kg"};
    if (rows.front() != header)
        throw MalformedManifest(path.string() +
                                ": expected header video_id,cow_id,day,period,body_weight_kg");

    auto excluded = [&](int day, Period p) {
        return std::find(exclusions.begin(), exclusions.end(), std::make_pair(day, p)) !=
               exclusions.end();
    };

    Manifest m;
    m.exclusions = exclusions;
    std::set<std::tuple<std::string, int, Period>> seen_sessions;
    std::set<std::string> seen_videos;

    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 5)
            throw MalformedManifest(path.string() + ": row " + std::to_string(i + 1) +
                                    " has " + std::to_string(row.size()) + " fields");
        Session s;
        s.cow_id = row[1];
        s.day = static_cast<int>(csv::parse_long(row[2], "manifest day"));
        s.period = period_from_string(row[3]);
        if (!row[4].empty()) {
            double w = csv::parse_double(row[4], "manifest weight");
            if (w <= 0) throw MalformedManifest(path.string() + ": non-positive body weight");
            s.body_weight_kg = w;
        }

        if (!seen_sessions.insert({s.cow_id, s.day, s.period}).second)
            throw DuplicateSession("duplicate session (" + s.cow_id + ", day " +
                                   std::to_string(s.day) + ", " + to_string(s.period) + ")");
        if (!seen_videos.insert(row[0]).second)
            throw MalformedManifest(path.string() + ": duplicate video id '" + row[0] + "'");

        if (excluded(s.day, s.period)) continue;
        m.video_ids.push_back(row[0]);
        m.sessions.push_back(std::move(s));
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "video_id,cow_id,day,period,body_weight_kg\n";
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const Session& s = manifest.sessions[i];
        out << manifest.video_ids[i] << ',' << s.cow_id << ',' << s.day << ','
            << to_string(s.period) << ',';
        if (s.body_weight_kg) out << csv::format_double(*s.body_weight_kg);
        out << '\n';
    }
}

} // namespace bovi
