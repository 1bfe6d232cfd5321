#include "bovi/segment.hpp"

#include "bovi/png_io.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace bovi {

namespace {

// Clockwise 8-neighbour ring (x right, y down): N, NE, E, SE, S, SW, W, NW.
constexpr int kRingX[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kRingY[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

struct Component {
    Eigen::Vector2i start; // topmost, then leftmost pixel
    Aabb bbox;
    double filled_area = 0.0;
};

bool on(const MaskGrid& m, int x, int y) {
    return x >= 0 && y >= 0 && x < m.cols() && y < m.rows() && m(y, x) != kMaskOff;
}

// Moore-neighbour border following around one 8-connected component, starting
// at its topmost-leftmost pixel (whose west neighbour is guaranteed black).
// Pixels come out in traversal order; pinch points appear once per passage.
Contour trace_boundary(const MaskGrid& m, const Eigen::Vector2i& start) {
    Contour c;
    const int sx = start.x();
    const int sy = start.y();

    int d1 = -1; // first white neighbour, scanning clockwise from west
    for (int k = 1; k <= 8; ++k) {
        const int dir = (6 + k) % 8;
        if (on(m, sx + kRingX[dir], sy + kRingY[dir])) {
            d1 = dir;
            break;
        }
    }
    c.points.emplace_back(sx, sy);
    if (d1 < 0) return c; // isolated pixel

    const Eigen::Vector2i first(sx + kRingX[d1], sy + kRingY[d1]);
    Eigen::Vector2i prev = first;       // treated as the pixel we arrived from
    Eigen::Vector2i cur(sx, sy);

    const std::size_t guard = static_cast<std::size_t>(m.size()) * 4 + 16;
    while (c.points.size() < guard) {
        int pd = 0; // ring index of prev around cur
        for (int k = 0; k < 8; ++k) {
            if (cur.x() + kRingX[k] == prev.x() && cur.y() + kRingY[k] == prev.y()) {
                pd = k;
                break;
            }
        }
        // scan counter-clockwise from the position after prev; prev itself is
        // checked last, so the scan always lands on a white pixel
        Eigen::Vector2i next = prev;
        for (int k = 1; k <= 8; ++k) {
            const int dir = (pd - k % 8 + 8) % 8;
            const int nx = cur.x() + kRingX[dir];
            const int ny = cur.y() + kRingY[dir];
            if (on(m, nx, ny)) {
                next = {nx, ny};
                break;
            }
        }
        // stopping rule: about to repeat the initial (start, first) state
        if (next == Eigen::Vector2i(sx, sy) && cur == first) break;
        c.points.push_back(next);
        prev = cur;
        cur = next;
    }
    return c;
}

// Label 8-connected white components; labels are 1-based, assigned in
// row-major discovery order so a smaller label means an earlier (topmost,
// then leftmost) start pixel.
Grid<int> label_components(const MaskGrid& m, std::vector<Component>& comps) {
    const int rows = static_cast<int>(m.rows());
    const int cols = static_cast<int>(m.cols());
    Grid<int> labels = Grid<int>::Zero(rows, cols);
    std::vector<Eigen::Vector2i> stack;
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            if (m(y, x) == kMaskOff || labels(y, x) != 0) continue;
            const int id = static_cast<int>(comps.size()) + 1;
            Component comp;
            comp.start = {x, y};
            int minx = x, maxx = x, miny = y, maxy = y;
            stack.assign(1, {x, y});
            labels(y, x) = id;
            while (!stack.empty()) {
                const Eigen::Vector2i p = stack.back();
                stack.pop_back();
                minx = std::min(minx, p.x());
                maxx = std::max(maxx, p.x());
                miny = std::min(miny, p.y());
                maxy = std::max(maxy, p.y());
                for (int k = 0; k < 8; ++k) {
                    const int nx = p.x() + kRingX[k];
                    const int ny = p.y() + kRingY[k];
                    if (nx < 0 || ny < 0 || nx >= cols || ny >= rows) continue;
                    if (m(ny, nx) == kMaskOff || labels(ny, nx) != 0) continue;
                    labels(ny, nx) = id;
                    stack.emplace_back(nx, ny);
                }
            }
            comp.bbox = {minx, miny, maxx - minx + 1, maxy - miny + 1};
            comps.push_back(comp);
        }
    }
    return labels;
}

// Pixels of component `id` plus any holes it encloses, found by flooding the
// background 4-connectedly from outside its bounding box. Returns the local
// filled grid (bbox-sized) and the filled pixel count.
std::pair<Grid<std::uint8_t>, double> fill_component(const Grid<int>& labels, int id,
                                                     const Aabb& box) {
    const int w = box.w + 2;
    const int h = box.h + 2;
    // 0 free, 1 component, 2 reached background
    Grid<std::uint8_t> local = Grid<std::uint8_t>::Zero(h, w);
    for (int y = 0; y < box.h; ++y)
        for (int x = 0; x < box.w; ++x)
            if (labels(box.y + y, box.x + x) == id) local(y + 1, x + 1) = 1;

    std::vector<Eigen::Vector2i> stack{{0, 0}};
    local(0, 0) = 2;
    constexpr int dx4[4] = {1, -1, 0, 0};
    constexpr int dy4[4] = {0, 0, 1, -1};
    while (!stack.empty()) {
        const Eigen::Vector2i p = stack.back();
        stack.pop_back();
        for (int k = 0; k < 4; ++k) {
            const int nx = p.x() + dx4[k];
            const int ny = p.y() + dy4[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (local(ny, nx) != 0) continue;
            local(ny, nx) = 2;
            stack.emplace_back(nx, ny);
        }
    }

    Grid<std::uint8_t> filled = Grid<std::uint8_t>::Zero(box.h, box.w);
    double area = 0.0;
    for (int y = 0; y < box.h; ++y) {
        for (int x = 0; x < box.w; ++x) {
            if (local(y + 1, x + 1) != 2) {
                filled(y, x) = kMaskOn;
                area += 1.0;
            }
        }
    }
    return {std::move(filled), area};
}

// Shared tail: optional neck removal followed by re-isolation of the body.
std::pair<MaskGrid, Contour> finish_mask(MaskGrid body, Contour contour,
                                         const SegmentOptions& opts) {
    if (!opts.remove_neck) return {std::move(body), std::move(contour)};
    MaskGrid trimmed = remove_neck(body, opts.neck_ratio, opts.head_side);
    return extract_body(trimmed);
}

} // namespace

std::string to_string(SegMethod m) {
    switch (m) {
    case SegMethod::Single: return "single";
    case SegMethod::Adaptive: return "adaptive";
    case SegMethod::External: return "external";
    }
    return "single";
}

SegMethod seg_method_from_string(const std::string& s) {
    if (s == "single") return SegMethod::Single;
    if (s == "adaptive") return SegMethod::Adaptive;
    if (s == "external") return SegMethod::External;
    throw ConfigError("unknown segmentation method: " + s);
}

int mean_hue_threshold(const std::vector<HueGrid>& images) {
    std::uint64_t sum = 0;
    std::uint64_t count = 0;
    for (const auto& img : images) {
        sum += static_cast<std::uint64_t>(img.template cast<std::int64_t>().sum());
        count += static_cast<std::uint64_t>(img.size());
    }
    if (count == 0) throw EmptyInput("no hue pixels to average");
    return static_cast<int>(std::llround(static_cast<double>(sum) / static_cast<double>(count)));
}

std::pair<MaskGrid, Contour> extract_body(const MaskGrid& mask) {
    std::vector<Component> comps;
    const Grid<int> labels = label_components(mask, comps);
    if (comps.empty()) throw NoForeground("mask has no white pixels");

    int best = -1;
    double best_area = -1.0;
    Grid<std::uint8_t> best_filled;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        auto [filled, area] = fill_component(labels, static_cast<int>(i) + 1, comps[i].bbox);
        comps[i].filled_area = area;
        // strict > keeps the earlier (topmost-leftmost start) component on ties
        if (area > best_area) {
            best = static_cast<int>(i);
            best_area = area;
            best_filled = std::move(filled);
        }
    }

    const Component& win = comps[static_cast<std::size_t>(best)];
    Contour contour = trace_boundary(mask, win.start);
    contour.area_px = best_area;

    MaskGrid out = MaskGrid::Zero(mask.rows(), mask.cols());
    for (int y = 0; y < win.bbox.h; ++y)
        for (int x = 0; x < win.bbox.w; ++x)
            if (best_filled(y, x) != kMaskOff) out(win.bbox.y + y, win.bbox.x + x) = kMaskOn;
    return {std::move(out), std::move(contour)};
}

MaskGrid remove_neck(const MaskGrid& mask, double ratio, Side head_side) {
    const int rows = static_cast<int>(mask.rows());
    const int cols = static_cast<int>(mask.cols());
    if (rows == 0 || cols == 0) throw EmptyInput("empty mask");

    std::vector<int> count(static_cast<std::size_t>(cols), 0);
    int peak = 0;
    for (int x = 0; x < cols; ++x) {
        int c = 0;
        for (int y = 0; y < rows; ++y)
            if (mask(y, x) != kMaskOff) ++c;
        count[static_cast<std::size_t>(x)] = c;
        peak = std::max(peak, c);
    }
    if (peak == 0) throw NoForeground("mask has no white pixels");

    const int step = head_side == Side::Left ? -1 : 1;
    int cut = -1;
    for (int x = cols / 2; x >= 0 && x < cols; x += step) {
        if (static_cast<double>(count[static_cast<std::size_t>(x)]) <
            ratio * static_cast<double>(peak)) {
            cut = x;
            break;
        }
    }

    MaskGrid out = mask;
    if (cut >= 0) {
        const int lo = head_side == Side::Left ? 0 : cut;
        const int hi = head_side == Side::Left ? cut : cols - 1;
        out.block(0, lo, rows, hi - lo + 1).setConstant(kMaskOff);
    }
    return out;
}

SegmentationResult single_segment(const HueGrid& hue, int t, const SegmentOptions& opts) {
    auto [body, contour] = extract_body(threshold(hue, t));
    auto [mask, final_contour] = finish_mask(std::move(body), std::move(contour), opts);
    return {std::move(mask), std::move(final_contour), t, SegMethod::Single};
}

SegmentationResult adaptive_segment(const HueGrid& hue, int margin, const SegmentOptions& opts) {
    const int rows = static_cast<int>(hue.rows());
    const int cols = static_cast<int>(hue.cols());
    if (rows == 0 || cols == 0) throw EmptyInput("empty hue image");
    if (margin < 0 || rows <= 2 * margin || cols <= 2 * margin)
        throw OutOfBounds("margin leaves no admissible bounding box");

    const int t0 = static_cast<int>(hue.minCoeff());
    for (int t = t0; t <= kHueMax; ++t) {
        try {
            auto [body, contour] = extract_body(threshold(hue, t));
            const Aabb box = axis_aligned_bbox(contour);
            const bool clear = box.x > margin && box.y > margin &&
                               cols - box.x - box.w > margin && rows - box.y - box.h > margin;
            if (!clear) continue;
            auto [mask, final_contour] = finish_mask(std::move(body), std::move(contour), opts);
            return {std::move(mask), std::move(final_contour), t, SegMethod::Adaptive};
        } catch (const NoForeground&) {
            continue;
        }
    }
    throw NoValidThreshold("no threshold keeps the body clear of the frame edges");
}

SegmentationResult external_mask_result(const MaskGrid& raw, const SegmentOptions& opts) {
    MaskGrid bin(raw.rows(), raw.cols());
    bin = (raw != kMaskOff).template cast<std::uint8_t>() * kMaskOn;
    auto [body, contour] = extract_body(bin);
    auto [mask, final_contour] = finish_mask(std::move(body), std::move(contour), opts);
    return {std::move(mask), std::move(final_contour), std::nullopt, SegMethod::External};
}

SegmentationResult load_external_mask(const std::filesystem::path& path, Eigen::Index rows,
                                      Eigen::Index cols, const SegmentOptions& opts) {
    MaskGrid raw = png::read_gray8(path);
    if (raw.rows() != rows || raw.cols() != cols)
        throw DimensionMismatch("external mask does not match frame dimensions");
    return external_mask_result(raw, opts);
}

} // namespace bovi
