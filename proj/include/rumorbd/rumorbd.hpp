#pragma once

#include "rumorbd/config.hpp"
#include "rumorbd/csv.hpp"
#include "rumorbd/error.hpp"
#include "rumorbd/fit.hpp"
#include "rumorbd/growth.hpp"
#include "rumorbd/homogeneous.hpp"
#include "rumorbd/moments.hpp"
#include "rumorbd/numeric.hpp"
#include "rumorbd/oracle.hpp"
#include "rumorbd/parallel.hpp"
#include "rumorbd/process.hpp"
#include "rumorbd/proportional.hpp"
#include "rumorbd/rates.hpp"
#include "rumorbd/report.hpp"
