#pragma once

#include "qrt/types.hpp"
#include "qrt/prng.hpp"
#include "qrt/qcore.hpp"
#include "qrt/reservoir.hpp"
#include "qrt/channels.hpp"
#include "qrt/readout.hpp"
#include "qrt/metrics.hpp"
#include "qrt/spectral.hpp"
#include "qrt/config.hpp"
#include "qrt/experiment.hpp"
