#pragma once

#include "errors.hpp"
#include "stencil.hpp"
#include "equiv.hpp"
#include "circuit.hpp"
#include "qsim.hpp"
#include "primitives.hpp"
#include "lattice.hpp"
#include "builders.hpp"
#include "measure.hpp"
#include "oracle.hpp"
#include "runner.hpp"
