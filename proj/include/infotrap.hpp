#pragma once

#include "infotrap/types.hpp"
#include "infotrap/linalg.hpp"
#include "infotrap/parallel.hpp"
#include "infotrap/gaussian_core.hpp"
#include "infotrap/spanning.hpp"
#include "infotrap/oracle.hpp"
#include "infotrap/dynamics.hpp"
#include "infotrap/comparison.hpp"
#include "infotrap/scenario.hpp"
