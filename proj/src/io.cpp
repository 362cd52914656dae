#include "sinkbary/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <png.h>

#include <json.hpp>

namespace sinkbary {

namespace {

using nlohmann::json;

std::string lower_ext(const std::string& path) {
    const auto ext = std::filesystem::path(path).extension().string();
    std::string out;
    for (char c : ext)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw MalformedInput("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw MalformedInput(path + ": " + e.what());
    }
    return j;
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw MalformedInput("cannot write " + path);
    out << content;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    for (size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << row[i];
        os << "\n";
    }
    write_text_file(path, os.str());
}

DiscreteMeasure read_measure_json(const std::string& path) {
    const json j = load_json(path);
    if (!j.is_object() || !j.contains("dim") || !j.contains("points"))
        throw MalformedInput(path + ": expected an object with dim and points");
    const int dim = j.at("dim").get<int>();
    std::vector<double> pts;
    for (const auto& p : j.at("points")) {
        if (static_cast<int>(p.size()) != dim)
            throw DimensionMismatch(path + ": point length does not match dim");
        for (const auto& c : p)
            pts.push_back(c.get<double>());
    }
    if (j.contains("weights")) {
        std::vector<double> ws;
        for (const auto& w : j.at("weights"))
            ws.push_back(w.get<double>());
        if (ws.size() * static_cast<size_t>(dim) != pts.size())
            throw DimensionMismatch(path + ": weights length does not match points");
        return new_measure(dim, std::move(pts), std::move(ws));
    }
    return new_measure_uniform(dim, std::move(pts));
}

void write_measure_json(const DiscreteMeasure& m, const std::string& path) {
    json j;
    j["dim"] = m.dim;
    json pts = json::array();
    for (int i = 0; i < m.size(); ++i) {
        json p = json::array();
        for (int t = 0; t < m.dim; ++t)
            p.push_back(m.xs[static_cast<size_t>(i) * m.dim + t]);
        pts.push_back(std::move(p));
    }
    j["points"] = std::move(pts);
    j["weights"] = m.weights;
    write_text_file(path, j.dump(2) + "\n");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trimmed(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& cell, const std::string& path) {
    try {
        size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != trimmed(cell).size() && pos != cell.size())
            throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw MalformedInput(path + ": cannot parse number '" + cell + "'");
    }
}

// Parses the x1..xd[,w] header; returns dim and whether a w column is present.
void parse_point_header(const std::vector<std::string>& cells, const std::string& path,
                        int& dim, bool& has_w) {
    if (cells.empty())
        throw MalformedInput(path + ": empty header");
    has_w = trimmed(cells.back()) == "w";
    dim = static_cast<int>(cells.size()) - (has_w ? 1 : 0);
    if (dim < 1)
        throw MalformedInput(path + ": header has no coordinate columns");
    for (int t = 0; t < dim; ++t) {
        const std::string expect = "x" + std::to_string(t + 1);
        if (trimmed(cells[static_cast<size_t>(t)]) != expect)
            throw MalformedInput(path + ": expected header column '" + expect + "'");
    }
}

} // namespace

DiscreteMeasure read_measure_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw MalformedInput("cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw MalformedInput(path + ": empty file");
    int dim = 0;
    bool has_w = false;
    parse_point_header(split_csv_line(line), path, dim, has_w);
    if (!has_w)
        throw MalformedInput(path + ": measure CSV needs a trailing w column");
    std::vector<double> pts;
    std::vector<double> ws;
    while (std::getline(in, line)) {
        if (trimmed(line).empty())
            continue;
        const auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != dim + 1)
            throw MalformedInput(path + ": row has wrong number of columns");
        for (int t = 0; t < dim; ++t)
            pts.push_back(parse_double(cells[static_cast<size_t>(t)], path));
        ws.push_back(parse_double(cells.back(), path));
    }
    return new_measure(dim, std::move(pts), std::move(ws));
}

void write_measure_csv(const DiscreteMeasure& m, const std::string& path) {
    std::vector<std::string> header;
    for (int t = 0; t < m.dim; ++t)
        header.push_back("x" + std::to_string(t + 1));
    header.push_back("w");
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < m.size(); ++i) {
        std::vector<std::string> row;
        for (int t = 0; t < m.dim; ++t)
            row.push_back(format_double(m.xs[static_cast<size_t>(i) * m.dim + t]));
        row.push_back(format_double(m.weights[static_cast<size_t>(i)]));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

std::vector<double> read_points_csv(const std::string& path, int& dim_out) {
    std::ifstream in(path);
    if (!in)
        throw MalformedInput("cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw MalformedInput(path + ": empty file");
    int dim = 0;
    bool has_w = false;
    parse_point_header(split_csv_line(line), path, dim, has_w);
    std::vector<double> pts;
    while (std::getline(in, line)) {
        if (trimmed(line).empty())
            continue;
        const auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != dim + (has_w ? 1 : 0))
            throw MalformedInput(path + ": row has wrong number of columns");
        for (int t = 0; t < dim; ++t)
            pts.push_back(parse_double(cells[static_cast<size_t>(t)], path));
    }
    if (pts.empty())
        throw MalformedInput(path + ": no points");
    dim_out = dim;
    return pts;
}

DiscreteMeasure read_measure(const std::string& path) {
    return lower_ext(path) == ".json" ? read_measure_json(path) : read_measure_csv(path);
}

namespace {

int pgm_next_int(std::istream& in, const std::string& path) {
    // Skips whitespace and # comments.
    for (;;) {
        const int c = in.peek();
        if (c == EOF)
            throw MalformedInput(path + ": truncated PGM header");
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        break;
    }
    int v = 0;
    if (!(in >> v))
        throw MalformedInput(path + ": bad PGM header value");
    return v;
}

} // namespace

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MalformedInput("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5")
        throw MalformedInput(path + ": not a P2/P5 PGM file");
    GrayImage img;
    img.width = pgm_next_int(in, path);
    img.height = pgm_next_int(in, path);
    const int maxval = pgm_next_int(in, path);
    if (img.width < 1 || img.height < 1)
        throw MalformedInput(path + ": bad PGM dimensions");
    if (maxval < 1 || maxval > 255)
        throw MalformedInput(path + ": only 8-bit PGM is supported");
    const size_t n = static_cast<size_t>(img.width) * static_cast<size_t>(img.height);
    img.pixels.resize(n);
    if (magic == "P2") {
        for (size_t i = 0; i < n; ++i)
            img.pixels[i] = pgm_next_int(in, path);
    } else {
        in.get(); // the single whitespace byte after maxval
        std::vector<unsigned char> raw(n);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n)
            throw MalformedInput(path + ": truncated PGM payload");
        for (size_t i = 0; i < n; ++i)
            img.pixels[i] = raw[i];
    }
    for (double v : img.pixels)
        if (v < 0 || v > maxval)
            throw MalformedInput(path + ": pixel out of range");
    return img;
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ostringstream os;
    os << "P2\n" << img.width << " " << img.height << "\n255\n";
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const int v = static_cast<int>(img.pixels[static_cast<size_t>(r) * img.width + c]);
            os << v << (c + 1 == img.width ? "\n" : " ");
        }
    }
    write_text_file(path, os.str());
}

GrayImage read_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp)
        throw MalformedInput("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png)
            png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw MalformedInput(path + ": cannot initialize PNG reader");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw MalformedInput(path + ": PNG decode failed");
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    // Normalize every layout to 8-bit grayscale.
    png_set_expand(png);
    if (png_get_bit_depth(png, info) == 16)
        png_set_strip_16(png);
    const png_byte color = png_get_color_type(png, info);
    if (color & PNG_COLOR_MASK_COLOR)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    if (color & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    GrayImage img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    const size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<unsigned char> row(rowbytes);
    img.pixels.resize(static_cast<size_t>(img.width) * static_cast<size_t>(img.height));
    const size_t stride = rowbytes / static_cast<size_t>(img.width);
    for (int r = 0; r < img.height; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < img.width; ++c)
            img.pixels[static_cast<size_t>(r) * img.width + c] = row[static_cast<size_t>(c) * stride];
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

GrayImage read_image(const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".png")
        return read_png(path);
    return read_pgm(path);
}

GrayImage render_measure(const DiscreteMeasure& m, int width, int height,
                         const std::vector<double>& box_lo, const std::vector<double>& box_hi) {
    if (m.dim != 2)
        throw DimensionMismatch("render_measure: only 2-dimensional measures render");
    if (width < 1 || height < 1)
        throw MalformedInput("render_measure: resolution must be positive");
    std::vector<double> lo = box_lo;
    std::vector<double> hi = box_hi;
    if (lo.empty() || hi.empty()) {
        lo = {m.xs[0], m.xs[1]};
        hi = lo;
        for (int i = 0; i < m.size(); ++i)
            for (int t = 0; t < 2; ++t) {
                lo[static_cast<size_t>(t)] = std::min(lo[static_cast<size_t>(t)], m.xs[static_cast<size_t>(i) * 2 + t]);
                hi[static_cast<size_t>(t)] = std::max(hi[static_cast<size_t>(t)], m.xs[static_cast<size_t>(i) * 2 + t]);
            }
    }
    if (lo.size() != 2 || hi.size() != 2 || lo[0] > hi[0] || lo[1] > hi[1])
        throw MalformedInput("render_measure: bad box");
    GrayImage img;
    img.width = width;
    img.height = height;
    std::vector<double> deposit(static_cast<size_t>(width) * static_cast<size_t>(height), 0.0);
    // Coordinate 0 maps to rows, coordinate 1 to columns (the inverse of
    // image_to_measure).
    const double er = (hi[0] - lo[0]) / height;
    const double ec = (hi[1] - lo[1]) / width;
    for (int i = 0; i < m.size(); ++i) {
        const double w = m.weights[static_cast<size_t>(i)];
        if (w <= 0.0)
            continue;
        int r = er > 0.0 ? static_cast<int>(std::floor((m.xs[static_cast<size_t>(i) * 2] - lo[0]) / er)) : 0;
        int c = ec > 0.0 ? static_cast<int>(std::floor((m.xs[static_cast<size_t>(i) * 2 + 1] - lo[1]) / ec)) : 0;
        r = std::clamp(r, 0, height - 1);
        c = std::clamp(c, 0, width - 1);
        deposit[static_cast<size_t>(r) * width + c] += w;
    }
    double peak = 0.0;
    for (double v : deposit)
        peak = std::max(peak, v);
    img.pixels.resize(deposit.size(), 0.0);
    if (peak > 0.0)
        for (size_t i = 0; i < deposit.size(); ++i)
            img.pixels[i] = std::floor(deposit[i] / peak * 255.0 + 0.5);
    return img;
}

GraphSpec read_graph_json(const std::string& path) {
    const json j = load_json(path);
    GraphSpec g;
    if (!j.is_object() || !j.contains("vertices") || !j.contains("edges"))
        throw MalformedInput(path + ": expected an object with vertices and edges");
    g.vertices = j.at("vertices").get<int>();
    if (g.vertices < 1)
        throw MalformedInput(path + ": vertices must be positive");
    for (const auto& e : j.at("edges")) {
        if (e.size() != 3)
            throw MalformedInput(path + ": edges must be [u, v, w] triples");
        const int u = e[0].get<int>();
        const int v = e[1].get<int>();
        const double w = e[2].get<double>();
        if (u < 0 || u >= g.vertices || v < 0 || v >= g.vertices || u == v)
            throw MalformedInput(path + ": edge endpoints out of range");
        if (!(w > 0.0))
            throw MalformedInput(path + ": edge weights must be positive");
        g.edges.push_back({static_cast<double>(u), static_cast<double>(v), w});
    }
    const auto dir = std::filesystem::path(path).parent_path();
    if (j.contains("known"))
        for (const auto& [key, val] : j.at("known").items()) {
            const int idx = std::stoi(key);
            if (idx < 0 || idx >= g.vertices)
                throw MalformedInput(path + ": known vertex out of range");
            const std::filesystem::path mp = val.get<std::string>();
            g.known[idx] = read_measure((mp.is_absolute() ? mp : dir / mp).string());
        }
    if (j.contains("unknown"))
        for (const auto& u : j.at("unknown")) {
            const int idx = u.get<int>();
            if (idx < 0 || idx >= g.vertices)
                throw MalformedInput(path + ": unknown vertex out of range");
            g.unknown.push_back(idx);
        }
    if (g.known.empty())
        throw MalformedInput(path + ": no known vertices");
    for (int u : g.unknown)
        if (g.known.count(u))
            throw MalformedInput(path + ": vertex listed both known and unknown");
    return g;
}

} // namespace sinkbary
