#ifndef SINKBARY_IO_HPP
#define SINKBARY_IO_HPP

#include <array>
#include <map>
#include <string>
#include <vector>

#include "sinkbary/measure.hpp"

namespace sinkbary {

// Measure files: JSON {"dim", "points", "weights"} (weights optional, then
// uniform) or CSV with header x1,...,xd,w. The loader dispatches on the
// file extension (.json vs anything else).
DiscreteMeasure read_measure(const std::string& path);
DiscreteMeasure read_measure_json(const std::string& path);
DiscreteMeasure read_measure_csv(const std::string& path);
void write_measure_json(const DiscreteMeasure& m, const std::string& path);
void write_measure_csv(const DiscreteMeasure& m, const std::string& path);

// Candidate point list: CSV with header x1,...,xd (a trailing w column is
// ignored). Returns flattened points.
std::vector<double> read_points_csv(const std::string& path, int& dim_out);

// 8-bit grayscale images. PGM accepts P2 and P5 with maxval <= 255; PNG is
// converted to 8-bit grayscale on load. Values are kept in [0, 255].
GrayImage read_image(const std::string& path); // dispatches on extension
GrayImage read_pgm(const std::string& path);
GrayImage read_png(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);

// Nearest-pixel mass deposit over the box, normalized so the largest deposit
// maps to 255. The box defaults to the tight atom bounding box.
GrayImage render_measure(const DiscreteMeasure& m, int width, int height,
                         const std::vector<double>& box_lo = {},
                         const std::vector<double>& box_hi = {});

// Propagation graph JSON: {"vertices": N, "edges": [[u, v, w], ...],
// "known": {"idx": "measure-file"}, "unknown": [idx, ...]}. Measure paths are
// resolved relative to the graph file's directory.
struct GraphSpec {
    int vertices = 0;
    std::vector<std::array<double, 3>> edges; // u, v, raw weight
    std::map<int, DiscreteMeasure> known;
    std::vector<int> unknown;
};

GraphSpec read_graph_json(const std::string& path);

// Deterministic full-precision number formatting shared by every writer.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

// Rows of already-formatted cells.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

} // namespace sinkbary

#endif
