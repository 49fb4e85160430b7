#include "designsense/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "designsense/error.hpp"

namespace dsense {

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt_scale(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// Frame, elements and decorations in the layout's own pixel space.
std::string render_body(const Layout& l, const RenderStyle& style, const std::string& indent) {
    const int W = l.canvas.width_px, H = l.canvas.height_px;
    std::ostringstream os;
    os << indent << "<rect class=\"frame\" x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H
       << "\" fill=\"#ffffff\" stroke=\"#222222\" stroke-width=\"" << style.stroke_width << "\"/>\n";

    std::vector<std::size_t> order(l.elements.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return l.elements[a].z < l.elements[b].z; });
    const int font = std::max(10, H / 40);
    for (std::size_t idx : order) {
        const Element& e = l.elements[idx];
        const std::string& color = style.palette.at(e.kind);
        const long x = to_pixel(e.bbox.x, W), y = to_pixel(e.bbox.y, H);
        const long w = to_pixel(e.bbox.w, W), h = to_pixel(e.bbox.h, H);
        os << indent << "<rect class=\"element\" data-id=\"" << escape_xml(e.id) << "\" data-kind=\""
           << to_string(e.kind) << "\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
           << "\" fill=\"" << color << "\" fill-opacity=\"0.35\" stroke=\"" << color << "\" stroke-width=\""
           << style.stroke_width << "\"/>\n";
        if (style.show_labels) {
            const std::string text = e.label.empty() ? e.id : e.id + ": " + e.label;
            os << indent << "<text class=\"label\" x=\"" << x + 4 << "\" y=\"" << y + font + 2 << "\" font-size=\""
               << font << "\" font-family=\"sans-serif\" fill=\"#000000\">" << escape_xml(text) << "</text>\n";
        }
    }
    if (style.show_scale_bar) {
        const long len = to_pixel(0.1, W);
        os << indent << "<g class=\"scale-bar\"><line x1=\"10\" y1=\"" << H - 10 << "\" x2=\"" << 10 + len
           << "\" y2=\"" << H - 10 << "\" stroke=\"#000000\" stroke-width=\"2\"/><text x=\"10\" y=\"" << H - 14
           << "\" font-size=\"" << font << "\" font-family=\"sans-serif\">" << W << "x" << H << " px</text></g>\n";
    }
    return os.str();
}

const char* kHeader = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";

}  // namespace

void RenderStyle::validate() const {
    for (auto k : kAllElementKinds) {
        if (!palette.count(k)) throw DomainError("render palette lacks a color for kind '" + std::string(to_string(k)) + "'");
    }
    if (stroke_width < 0 || pair_display_height < 1 || gutter < 0 || caption_height < 0)
        throw DomainError("render sizes must be non-negative (display height positive)");
}

long to_pixel(double normalized, int pixels) { return static_cast<long>(std::floor(normalized * pixels + 0.5)); }

std::string render_svg(const Layout& l, const RenderStyle& style) {
    style.validate();
    check_layout(l);
    const int W = l.canvas.width_px, H = l.canvas.height_px;
    std::ostringstream os;
    os << kHeader << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\" data-layout-id=\"" << escape_xml(l.layout_id) << "\">\n"
       << render_body(l, style, "  ") << "</svg>\n";
    return os.str();
}

std::string render_pair(const PreferencePair& p, const RenderStyle& style) {
    style.validate();
    check_layout(p.left);
    check_layout(p.right);
    const int H = style.pair_display_height;
    const double sl = static_cast<double>(H) / p.left.canvas.height_px;
    const double sr = static_cast<double>(H) / p.right.canvas.height_px;
    const long wl = static_cast<long>(std::floor(p.left.canvas.width_px * sl + 0.5));
    const long wr = static_cast<long>(std::floor(p.right.canvas.width_px * sr + 0.5));
    const long total_w = wl + style.gutter + wr;
    const long total_h = H + style.caption_height;
    const int font = std::max(12, style.caption_height - 8);

    std::ostringstream os;
    os << kHeader << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << total_w << "\" height=\""
       << total_h << "\" viewBox=\"0 0 " << total_w << " " << total_h << "\" data-pair-id=\"" << escape_xml(p.pair_id)
       << "\">\n";
    const auto side = [&](const Layout& l, const char* caption, long tx, long w, double s) {
        os << "  <g class=\"side\" data-side=\"" << caption << "\" transform=\"translate(" << tx << ",0) scale("
           << fmt_scale(s) << ")\">\n"
           << render_body(l, style, "    ") << "  </g>\n";
        os << "  <text class=\"caption\" x=\"" << tx + w / 2 << "\" y=\"" << H + style.caption_height - 6
           << "\" font-size=\"" << font << "\" font-family=\"sans-serif\" text-anchor=\"middle\">" << caption
           << "</text>\n";
    };
    side(p.left, "A", 0, wl, sl);
    side(p.right, "B", wl + style.gutter, wr, sr);
    os << "</svg>\n";
    return os.str();
}

std::string base64_encode(const std::string& bytes) {
    static const char* table = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8) | static_cast<unsigned char>(bytes[i + 2]);
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += table[(v >> 6) & 63];
        out += table[v & 63];
    }
    if (i < bytes.size()) {
        unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        if (i + 1 < bytes.size()) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += i + 1 < bytes.size() ? table[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

}  // namespace dsense
