#include "ventsim/boundary.hpp"

#include <algorithm>
#include <stdexcept>

namespace ventsim {

std::string to_string(Side s) {
    switch (s) {
        case Side::Bottom: return "bottom";
        case Side::Top: return "top";
        case Side::Left: return "left";
        case Side::Right: return "right";
    }
    return "?";
}

std::string to_string(SegmentKind k) {
    switch (k) {
        case SegmentKind::SolidWall: return "wall";
        case SegmentKind::SupplyVent: return "supply";
        case SegmentKind::ReturnVent: return "return";
        case SegmentKind::OutsideWall: return "outside";
    }
    return "?";
}

namespace {

double side_length(const Grid& g, Side s) {
    return (s == Side::Top || s == Side::Bottom) ? g.lx : g.ly;
}

SegmentKind kind_at(const std::vector<BoundarySegment>& segs, Side side, double coord) {
    for (const auto& s : segs) {
        if (s.side == side && coord >= s.from && coord <= s.to) return s.kind;
    }
    return SegmentKind::SolidWall;
}

} // namespace

SegmentKind BoundaryMap::side_kind_at(Side s, double coord) const {
    const std::vector<SegmentKind>* faces = nullptr;
    double h = 0.0;
    switch (s) {
        case Side::Top: faces = &top_face; h = grid.dx; break;
        case Side::Bottom: faces = &bottom_face; h = grid.dx; break;
        case Side::Left: faces = &left_face; h = grid.dy; break;
        case Side::Right: faces = &right_face; h = grid.dy; break;
    }
    int n = static_cast<int>(faces->size());
    int i = static_cast<int>(coord / h);
    i = std::clamp(i, 0, n - 1);
    return (*faces)[i];
}

int BoundaryMap::count_cells(SegmentKind k) const {
    int n = 0;
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            if (grid.is_perimeter(i, j) && cell(i, j) == k) ++n;
    return n;
}

std::vector<std::pair<int, int>> BoundaryMap::cells_of(SegmentKind k) const {
    std::vector<std::pair<int, int>> out;
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            if (grid.is_perimeter(i, j) && cell(i, j) == k) out.emplace_back(i, j);
    return out;
}

BoundaryMap classify_boundary(const Grid& grid, const std::vector<BoundarySegment>& segments) {
    for (const auto& s : segments) {
        double len = side_length(grid, s.side);
        if (s.from < -1e-12 || s.to > len + 1e-12 || s.from >= s.to)
            throw std::invalid_argument("classify_boundary: segment [" + std::to_string(s.from) +
                                        ", " + std::to_string(s.to) + "] on side " +
                                        to_string(s.side) + " lies outside [0, " +
                                        std::to_string(len) + "] or is empty");
    }

    // Reject overlapping spans per side (touching endpoints are fine).
    for (size_t a = 0; a < segments.size(); ++a) {
        for (size_t b = a + 1; b < segments.size(); ++b) {
            if (segments[a].side != segments[b].side) continue;
            double lo = std::max(segments[a].from, segments[b].from);
            double hi = std::min(segments[a].to, segments[b].to);
            if (lo < hi - 1e-12)
                throw std::invalid_argument(
                    "classify_boundary: segments overlap on side " + to_string(segments[a].side) +
                    " over [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
    }

    BoundaryMap bm;
    bm.grid = grid;
    bm.cell_kind.assign(static_cast<size_t>(grid.cell_count()), SegmentKind::SolidWall);
    bm.top_face.resize(static_cast<size_t>(grid.nx));
    bm.bottom_face.resize(static_cast<size_t>(grid.nx));
    bm.left_face.resize(static_cast<size_t>(grid.ny));
    bm.right_face.resize(static_cast<size_t>(grid.ny));

    for (int i = 0; i < grid.nx; ++i) {
        double x = grid.cell_x(i);
        bm.top_face[i] = kind_at(segments, Side::Top, x);
        bm.bottom_face[i] = kind_at(segments, Side::Bottom, x);
    }
    for (int j = 0; j < grid.ny; ++j) {
        double y = grid.cell_y(j);
        bm.left_face[j] = kind_at(segments, Side::Left, y);
        bm.right_face[j] = kind_at(segments, Side::Right, y);
    }

    // Cells: corners belong to the vertical sides, interior spans of each
    // row/column to top/bottom.
    for (int j = 0; j < grid.ny; ++j) {
        bm.cell_kind[grid.cell_index(0, j)] = kind_at(segments, Side::Left, grid.cell_y(j));
        bm.cell_kind[grid.cell_index(grid.nx - 1, j)] =
            kind_at(segments, Side::Right, grid.cell_y(j));
    }
    for (int i = 1; i < grid.nx - 1; ++i) {
        bm.cell_kind[grid.cell_index(i, 0)] = kind_at(segments, Side::Bottom, grid.cell_x(i));
        bm.cell_kind[grid.cell_index(i, grid.ny - 1)] =
            kind_at(segments, Side::Top, grid.cell_x(i));
    }
    return bm;
}

} // namespace ventsim
