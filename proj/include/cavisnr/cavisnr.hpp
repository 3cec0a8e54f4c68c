#pragma once

#include "cavisnr/error.hpp"
#include "cavisnr/params.hpp"
#include "cavisnr/hilbert.hpp"
#include "cavisnr/steadystate.hpp"
#include "cavisnr/detect.hpp"
#include "cavisnr/parallel.hpp"
#include "cavisnr/analytics.hpp"
#include "cavisnr/sweep.hpp"
#include "cavisnr/discriminator.hpp"
