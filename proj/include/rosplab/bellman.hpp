#pragma once

#include "rosplab/bellman/examples.hpp"
#include "rosplab/bellman/instance.hpp"
#include "rosplab/bellman/io.hpp"
#include "rosplab/bellman/operators.hpp"
#include "rosplab/bellman/shape.hpp"
#include "rosplab/bellman/verify.hpp"
