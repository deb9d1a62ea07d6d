#pragma once

#include "bundle.hpp"
#include "common.hpp"
#include "integrate.hpp"
#include "jet.hpp"
#include "lagrangian.hpp"
#include "lie.hpp"
#include "poly.hpp"
#include "reconstruct.hpp"
#include "routh.hpp"
#include "systems.hpp"
