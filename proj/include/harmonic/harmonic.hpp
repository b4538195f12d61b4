#pragma once

// Everything in one include.

#include "harmonic/compact_dual.hpp"
#include "harmonic/corpus.hpp"
#include "harmonic/euclidean_uncertainty.hpp"
#include "harmonic/expression.hpp"
#include "harmonic/fft.hpp"
#include "harmonic/motion_group.hpp"
#include "harmonic/nilpotent.hpp"
#include "harmonic/product_group.hpp"
#include "harmonic/report.hpp"
#include "harmonic/sampled_field.hpp"
