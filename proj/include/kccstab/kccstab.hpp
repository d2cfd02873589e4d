#pragma once

#include "kccstab/error.hpp"
#include "kccstab/dual.hpp"
#include "kccstab/taylor2.hpp"
#include "kccstab/expr.hpp"
#include "kccstab/tensor.hpp"
#include "kccstab/sode.hpp"
#include "kccstab/linstab.hpp"
#include "kccstab/kcc.hpp"
#include "kccstab/ode.hpp"
#include "kccstab/flow.hpp"
#include "kccstab/format.hpp"
#include "kccstab/models.hpp"
#include "kccstab/sweep.hpp"
#include "kccstab/random_systems.hpp"
#include "kccstab/report.hpp"
#include "kccstab/verify.hpp"
