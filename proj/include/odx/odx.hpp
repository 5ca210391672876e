#pragma once

#include "odx/catalogue.hpp"
#include "odx/diagnostics.hpp"
#include "odx/escape_scan.hpp"
#include "odx/farey_operator.hpp"
#include "odx/induced.hpp"
#include "odx/interval_map.hpp"
#include "odx/large_deviations.hpp"
#include "odx/lscan.hpp"
#include "odx/ly_probe.hpp"
#include "odx/open_system.hpp"
#include "odx/spectral.hpp"
#include "odx/survival.hpp"
#include "odx/ulam.hpp"
