#pragma once

#include "crisscross/errors.hpp"
#include "crisscross/experiment.hpp"
#include "crisscross/families.hpp"
#include "crisscross/gee.hpp"
#include "crisscross/identify.hpp"
#include "crisscross/io.hpp"
#include "crisscross/logistic.hpp"
#include "crisscross/model.hpp"
#include "crisscross/pseudolik.hpp"
#include "crisscross/quadrature.hpp"
#include "crisscross/rng.hpp"
#include "crisscross/simulate.hpp"
