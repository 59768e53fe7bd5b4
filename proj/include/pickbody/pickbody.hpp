#pragma once

#include "pickbody/errors.hpp"
#include "pickbody/numlin.hpp"
#include "pickbody/moebius.hpp"
#include "pickbody/pick_disc.hpp"
#include "pickbody/kernel_ball.hpp"
#include "pickbody/cara.hpp"
#include "pickbody/extremal.hpp"
