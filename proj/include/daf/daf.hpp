#pragma once

// Umbrella header for the whole library.

#include "daf/assembly.hpp"
#include "daf/binio.hpp"
#include "daf/cascade.hpp"
#include "daf/cli.hpp"
#include "daf/config.hpp"
#include "daf/data.hpp"
#include "daf/dct.hpp"
#include "daf/error.hpp"
#include "daf/features.hpp"
#include "daf/fixture.hpp"
#include "daf/hog.hpp"
#include "daf/image.hpp"
#include "daf/lfs.hpp"
#include "daf/manifest.hpp"
#include "daf/matrix.hpp"
#include "daf/metrics.hpp"
#include "daf/parallel.hpp"
#include "daf/perturb.hpp"
#include "daf/pipeline.hpp"
#include "daf/rng.hpp"
#include "daf/store.hpp"
#include "daf/trees.hpp"
