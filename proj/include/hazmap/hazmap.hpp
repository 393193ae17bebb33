#pragma once

// Umbrella header for the whole toolkit.

#include "hazmap/config.hpp"
#include "hazmap/kdtree.hpp"
#include "hazmap/metrics.hpp"
#include "hazmap/normals.hpp"
#include "hazmap/pipeline.hpp"
#include "hazmap/point_cloud.hpp"
#include "hazmap/point_cloud_io.hpp"
#include "hazmap/projection.hpp"
#include "hazmap/registry/client.hpp"
#include "hazmap/registry/net.hpp"
#include "hazmap/registry/replay.hpp"
#include "hazmap/registry/server.hpp"
#include "hazmap/registry/store.hpp"
#include "hazmap/rng.hpp"
#include "hazmap/rpca.hpp"
#include "hazmap/saliency.hpp"
#include "hazmap/segmentation.hpp"
#include "hazmap/synth.hpp"
