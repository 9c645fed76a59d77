#pragma once

#include <string>
#include <vector>

#include "scif/image_io.hpp"

#ifndef SCIF_TEST_DATA_DIR
#error "SCIF_TEST_DATA_DIR must point at tests/data"
#endif

namespace scif::testing {

/// The ten 256x256 natural test images.
inline std::vector<std::string> natural_fixtures() {
  return {"astronaut.ppm", "chelsea.ppm", "coffee.ppm", "rocket.ppm",          "camera.pgm",
          "coins.pgm",     "moon.pgm",    "ihc.ppm",    "motorcycle_left.ppm", "brick.pgm"};
}

inline std::string fixture_path(const std::string& name) { return std::string(SCIF_TEST_DATA_DIR) + "/" + name; }

inline RasterImage load_fixture(const std::string& name) { return read_image(fixture_path(name)); }

}  // namespace scif::testing
