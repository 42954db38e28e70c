#pragma once

#include "mechlab/core.hpp"
#include "mechlab/quadrature.hpp"
#include "mechlab/parallel.hpp"
#include "mechlab/sampling.hpp"
#include "mechlab/mechanisms.hpp"
#include "mechlab/axioms.hpp"
#include "mechlab/attack.hpp"
#include "mechlab/theorem.hpp"
#include "mechlab/report.hpp"
#include "mechlab/cli.hpp"
