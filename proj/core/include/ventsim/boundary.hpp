#pragma once

#include "ventsim/grid.hpp"

#include <string>
#include <vector>

namespace ventsim {

enum class Side { Bottom, Top, Left, Right };

enum class SegmentKind { SolidWall, SupplyVent, ReturnVent, OutsideWall };

std::string to_string(Side s);
std::string to_string(SegmentKind k);

/// A labeled interval of the room perimeter. The span is measured in
/// meters along the side: x for top/bottom, y for left/right.
struct BoundarySegment {
    Side side = Side::Top;
    double from = 0.0;
    double to = 0.0;
    SegmentKind kind = SegmentKind::SolidWall;

    bool operator==(const BoundarySegment&) const = default;
};

/// Per-cell and per-face classification of the room boundary.
///
/// Perimeter cells carry the scalar boundary conditions; boundary faces
/// (u at i=0/nx, v at j=0/ny) carry the velocity conditions. Corner cells
/// are owned by the left/right sides so that a full-height side segment
/// (like the outside wall of the reference room) claims its corners.
struct BoundaryMap {
    Grid grid;
    std::vector<SegmentKind> cell_kind; ///< one entry per cell; interior cells are SolidWall but unused
    std::vector<SegmentKind> top_face;  ///< v-face (i, ny), i = 0..nx-1
    std::vector<SegmentKind> bottom_face; ///< v-face (i, 0)
    std::vector<SegmentKind> left_face;   ///< u-face (0, j), j = 0..ny-1
    std::vector<SegmentKind> right_face;  ///< u-face (nx, j)

    SegmentKind cell(int i, int j) const { return cell_kind[grid.cell_index(i, j)]; }

    /// Kind of the wall next to a tangential velocity row; `coord` is the
    /// position along the side in meters.
    SegmentKind side_kind_at(Side s, double coord) const;

    int count_cells(SegmentKind k) const;
    std::vector<std::pair<int, int>> cells_of(SegmentKind k) const;

    bool has_supply() const { return count_cells(SegmentKind::SupplyVent) > 0; }
    bool has_return() const { return count_cells(SegmentKind::ReturnVent) > 0; }
};

/// Labels every boundary cell and face from the segment list. Unlabeled
/// spans become SolidWall. Overlapping segments on one side are rejected
/// with a message naming the conflicting spans.
BoundaryMap classify_boundary(const Grid& grid, const std::vector<BoundarySegment>& segments);

} // namespace ventsim
