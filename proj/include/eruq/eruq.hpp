#pragma once

#include "eruq/annotation.hpp"
#include "eruq/data_model.hpp"
#include "eruq/error.hpp"
#include "eruq/metrics.hpp"
#include "eruq/scoring.hpp"
#include "eruq/semantic.hpp"
#include "eruq/spectral.hpp"
#include "eruq/synthetic.hpp"
#include "eruq/text.hpp"
#include "eruq/uq_sim.hpp"
