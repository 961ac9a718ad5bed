#pragma once

#include "refractor/error.hpp"
#include "refractor/vecgeom.hpp"
#include "refractor/parallel.hpp"
#include "refractor/snell.hpp"
#include "refractor/oval.hpp"
#include "refractor/scene.hpp"
#include "refractor/measure.hpp"
#include "refractor/solver.hpp"
#include "refractor/refractor_solve.hpp"
#include "refractor/raytrace.hpp"
