#pragma once

#include "fundshift/breaks.hpp"
#include "fundshift/date.hpp"
#include "fundshift/error.hpp"
#include "fundshift/marketdata.hpp"
#include "fundshift/perf.hpp"
#include "fundshift/regress.hpp"
#include "fundshift/report.hpp"
#include "fundshift/stylebox.hpp"
#include "fundshift/synth.hpp"
