#pragma once

#include "avgexp/cache.hpp"
#include "avgexp/constants.hpp"
#include "avgexp/counting.hpp"
#include "avgexp/curve.hpp"
#include "avgexp/element_order.hpp"
#include "avgexp/errors.hpp"
#include "avgexp/harness.hpp"
#include "avgexp/modarith.hpp"
#include "avgexp/record.hpp"
#include "avgexp/structure.hpp"
#include "avgexp/verify.hpp"
