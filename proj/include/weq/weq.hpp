#pragma once

#include "weq/acceleration.hpp"
#include "weq/automata.hpp"
#include "weq/core.hpp"
#include "weq/counter_system.hpp"
#include "weq/names.hpp"
#include "weq/nielsen.hpp"
#include "weq/oracle.hpp"
#include "weq/pad.hpp"
#include "weq/parser.hpp"
#include "weq/problem.hpp"
#include "weq/solver.hpp"
