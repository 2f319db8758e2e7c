#pragma once

#include "patchnav/multilevel_map.hpp"

namespace patchnav {

/// Mesh cell and part containing a world xy point. Mesh cell (m, n) covers
/// [m*res_m, (m+1)*res_m) x [n*res_m, (n+1)*res_m); points on the diagonal
/// belong to the down part.
MeshIndex locate_cell(double x, double y, const MapParams& params);

/// True iff the patches have at least one identical vertex. Vertices are
/// shared slice records, so the comparison is exact.
bool shares_vertices(const Patch& p1, const Patch& p2);

/// Hinted lookup used at patch transitions: searches the (cell, part) under
/// (x, y) for a traversable patch sharing a vertex with the hint. Returns
/// nullptr when the waypoint collides with an untraversable or empty region.
const Patch* locate_patch(const MultiLevelMap& map, double x, double y, const Patch& hint);

/// Hint-free lookup for start/goal snapping: the traversable patch in the
/// (cell, part) under (x, y) whose plane height is nearest to ref_z.
const Patch* locate_patch(const MultiLevelMap& map, double x, double y, double ref_z);

}  // namespace patchnav
