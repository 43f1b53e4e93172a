#pragma once

#include "mlow/component_io.hpp"
#include "mlow/dataio.hpp"
#include "mlow/error.hpp"
#include "mlow/factorization.hpp"
#include "mlow/forecaster.hpp"
#include "mlow/format.hpp"
#include "mlow/log.hpp"
#include "mlow/pipeline.hpp"
#include "mlow/spectral.hpp"
#include "mlow/synth.hpp"
#include "mlow/version.hpp"
