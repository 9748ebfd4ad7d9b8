#pragma once

#include "cylmin/elliptic.hpp"
#include "cylmin/energy.hpp"
#include "cylmin/errors.hpp"
#include "cylmin/grid.hpp"
#include "cylmin/io.hpp"
#include "cylmin/minimize.hpp"
#include "cylmin/numerics.hpp"
#include "cylmin/relax.hpp"
