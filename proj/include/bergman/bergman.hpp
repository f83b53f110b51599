#pragma once

#include <bergman/domain.hpp>
#include <bergman/error.hpp>
#include <bergman/experiments.hpp>
#include <bergman/geodesics.hpp>
#include <bergman/geometry.hpp>
#include <bergman/grassmann.hpp>
#include <bergman/kernel.hpp>
#include <bergman/lbfgs.hpp>
#include <bergman/loci.hpp>
#include <bergman/log.hpp>
#include <bergman/path.hpp>
#include <bergman/quadrature.hpp>
