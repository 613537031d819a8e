#pragma once

#include "loopwell/error.hpp"
#include "loopwell/taylor.hpp"
#include "loopwell/series.hpp"
#include "loopwell/normal_form.hpp"
#include "loopwell/random_deformation.hpp"
#include "loopwell/hermitian_matrix.hpp"
#include "loopwell/eigensolve.hpp"
#include "loopwell/quantize.hpp"
#include "loopwell/lab.hpp"
#include "loopwell/io.hpp"
#include "loopwell/cli.hpp"
