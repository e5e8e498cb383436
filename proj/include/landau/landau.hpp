#pragma once

#include "core.hpp"
#include "quadrature.hpp"
#include "equilibrium.hpp"
#include "dispersion.hpp"
#include "volterra.hpp"
#include "velocity.hpp"
#include "linresponse.hpp"
#include "radial.hpp"
#include "characteristics.hpp"
#include "nonlinear.hpp"
#include "diagnostics.hpp"
#include "config.hpp"
#include "io.hpp"
#include "pipeline.hpp"
