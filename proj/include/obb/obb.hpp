#pragma once

#include "obb/errors.hpp"
#include "obb/geometry.hpp"
#include "obb/losses.hpp"
#include "obb/steppers.hpp"
#include "obb/learner.hpp"
#include "obb/regret.hpp"
