#pragma once

#include "lipvar/core.hpp"
#include "lipvar/geometry.hpp"
#include "lipvar/kernels.hpp"
#include "lipvar/transforms.hpp"
#include "lipvar/variation.hpp"
#include "lipvar/transport.hpp"
#include "lipvar/optimize.hpp"
#include "lipvar/coefficients.hpp"
#include "lipvar/martingale.hpp"
#include "lipvar/harness.hpp"
#include "lipvar/io.hpp"
