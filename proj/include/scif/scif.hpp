#pragma once

// Umbrella header.
#include "scif/codec.hpp"
#include "scif/contour.hpp"
#include "scif/edge_detect.hpp"
#include "scif/edit.hpp"
#include "scif/edit_script.hpp"
#include "scif/features.hpp"
#include "scif/image.hpp"
#include "scif/image_io.hpp"
#include "scif/metrics.hpp"
#include "scif/reconstruct.hpp"
#include "scif/representation.hpp"
#include "scif/sweep.hpp"
