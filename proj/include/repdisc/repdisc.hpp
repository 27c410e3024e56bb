#pragma once

#include "repdisc/core.hpp"
#include "repdisc/distances.hpp"
#include "repdisc/error.hpp"
#include "repdisc/fmat_io.hpp"
#include "repdisc/metrics.hpp"
#include "repdisc/probes.hpp"
#include "repdisc/rng.hpp"
#include "repdisc/spectral.hpp"
#include "repdisc/synth.hpp"
#include "repdisc/types.hpp"
#include "repdisc/verify.hpp"
