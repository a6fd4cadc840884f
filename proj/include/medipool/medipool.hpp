#pragma once

// Convenience header pulling in the whole library.

#include "medipool/math.hpp"
#include "medipool/optimize.hpp"
#include "medipool/random.hpp"
#include "medipool/distributions.hpp"
#include "medipool/study_data.hpp"
#include "medipool/pooling.hpp"
#include "medipool/methods.hpp"
#include "medipool/mean_methods.hpp"
#include "medipool/median_methods.hpp"
#include "medipool/describe.hpp"
#include "medipool/threading.hpp"
#include "medipool/analysis.hpp"
#include "medipool/report.hpp"
#include "medipool/forest.hpp"
