#pragma once

// Umbrella header for the analysis library (no HTTP dependency).

#include "netident/engine.hpp"
#include "netident/errors.hpp"
#include "netident/gfp.hpp"
#include "netident/oracle.hpp"
#include "netident/report_io.hpp"
#include "netident/topology.hpp"
#include "netident/verify.hpp"
#include "netident/version.hpp"
