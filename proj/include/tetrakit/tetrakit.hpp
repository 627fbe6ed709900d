#pragma once

#include "errors.hpp"
#include "matkernel.hpp"
#include "geometry.hpp"
#include "classify.hpp"
#include "fundops.hpp"
#include "models.hpp"
#include "gen.hpp"
#include "io.hpp"
#include "cli.hpp"
