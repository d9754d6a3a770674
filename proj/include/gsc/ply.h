#pragma once

#include <string>

#include "gsc/field.h"

namespace gsc {

// Binary little-endian PLY with the 3DGS vertex layout: x/y/z, nx/ny/nz,
// f_dc_*, f_rest_*, opacity, scale_*, rot_*. Opacity is stored as a logit and
// scale as a log, matching the reference layout; values are mapped back to
// their natural ranges on load.
void writePly(const GaussianCloud& cloud, const std::string& path);
GaussianCloud readPly(const std::string& path);

}  // namespace gsc
