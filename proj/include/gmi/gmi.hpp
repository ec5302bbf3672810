#pragma once

// Umbrella header.

#include "gmi/aft.hpp"
#include "gmi/analysis.hpp"
#include "gmi/bandwidth.hpp"
#include "gmi/bootstrap.hpp"
#include "gmi/csv.hpp"
#include "gmi/distributions.hpp"
#include "gmi/estimator.hpp"
#include "gmi/frailty.hpp"
#include "gmi/kernel.hpp"
#include "gmi/km.hpp"
#include "gmi/rng.hpp"
#include "gmi/scenario.hpp"
#include "gmi/subject.hpp"
#include "gmi/survival_curve.hpp"
